#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "stancecred/corpus.hpp"
#include "stancecred/encode.hpp"
#include "stancecred/eval.hpp"
#include "stancecred/models.hpp"
#include "stancecred/stance.hpp"
#include "stancecred/util.hpp"

using namespace stancecred;

namespace {

Eigen::VectorXd random_vector(int dim, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.next_double() * 2.0 - 1.0;
  return v;
}

std::string messy_text() {
  std::string s;
  for (int i = 0; i < 40; ++i) {
    s += "<p>BREAKING &amp; Exclusive!!  Officials   say the report, ";
    s += "dated 2016-03-14, was \"leaked\" online...</p>\n";
  }
  return s;
}

FeatureRecord embedded_record(int seq_len, int emb_dim, std::uint64_t seed) {
  Rng rng(seed);
  FeatureRecord rec;
  rec.sequence.resize(seq_len, emb_dim);
  for (int r = 0; r < seq_len; ++r) {
    for (int c = 0; c < emb_dim; ++c) {
      rec.sequence(r, c) = static_cast<float>(rng.next_double() - 0.5);
    }
  }
  rec.stance = 0.3;
  return rec;
}

Model make_model(Architecture arch, int seq_len, int emb_dim) {
  ModelConfig cfg;
  cfg.architecture = arch;
  cfg.seed = 1;
  InputSpec spec;
  spec.seq_len = seq_len;
  spec.emb_dim = emb_dim;
  return Model(cfg, spec);
}

void BM_CosineSimilarity(benchmark::State& state) {
  auto a = random_vector(static_cast<int>(state.range(0)), 11);
  auto b = random_vector(static_cast<int>(state.range(0)), 12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cosine_similarity(a, b));
  }
}
BENCHMARK(BM_CosineSimilarity)->Arg(100)->Arg(768);

void BM_CleanText(benchmark::State& state) {
  auto raw = messy_text();
  for (auto _ : state) {
    benchmark::DoNotOptimize(clean_text(raw));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * raw.size()));
}
BENCHMARK(BM_CleanText);

void BM_TokenizeWords(benchmark::State& state) {
  auto corpus = std::vector<std::string>{clean_text(messy_text())};
  auto vocab = build_vocab(corpus, 20000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tokenize_words(corpus[0], vocab, 512));
  }
}
BENCHMARK(BM_TokenizeWords);

void BM_MeanPool(benchmark::State& state) {
  auto rec = embedded_record(512, 768, 21);
  std::vector<int> mask(512, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pool(rec.sequence, mask));
  }
}
BENCHMARK(BM_MeanPool);

void BM_ModelForward(benchmark::State& state) {
  auto arch = static_cast<Architecture>(state.range(0));
  auto model = make_model(arch, 256, 100);
  std::vector<FeatureRecord> batch{embedded_record(256, 100, 31)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict_proba(batch));
  }
  state.SetLabel(to_string(arch));
}
BENCHMARK(BM_ModelForward)
    ->Arg(static_cast<int>(Architecture::ANN))
    ->Arg(static_cast<int>(Architecture::LSTM))
    ->Arg(static_cast<int>(Architecture::BILSTM))
    ->Arg(static_cast<int>(Architecture::CNN));

void BM_RocAuc(benchmark::State& state) {
  std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(41);
  std::vector<int> y(n);
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(rng.below(2));
    s[i] = rng.next_double();
  }
  y[0] = 1;
  y[1] = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(roc_auc(y, s));
  }
}
BENCHMARK(BM_RocAuc)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
