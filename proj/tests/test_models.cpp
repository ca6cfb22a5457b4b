#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "stancecred/errors.hpp"
#include "stancecred/models.hpp"
#include "stancecred/util.hpp"
#include "support/synthetic.hpp"

using namespace stancecred;

namespace {

ModelConfig small_config(Architecture arch, std::uint64_t seed = 1) {
  ModelConfig cfg;
  cfg.architecture = arch;
  cfg.recurrent_units = 16;
  cfg.conv_filters = 12;
  cfg.conv_kernel = 3;
  cfg.dense_units = 16;
  cfg.dropout = 0.0;
  cfg.seed = seed;
  return cfg;
}

InputSpec small_spec() {
  InputSpec spec;
  spec.seq_len = 12;
  spec.emb_dim = 8;
  spec.stance = true;
  return spec;
}

TrainHyperparams fast_hp() {
  TrainHyperparams hp;
  hp.batch_size = 16;
  hp.max_epochs = 20;
  hp.learning_rate = 5e-3;
  hp.early_stop_patience = 20;
  return hp;
}

double trained_accuracy(Model& model, const std::vector<FeatureRecord>& records) {
  auto probs = model.predict_proba(records);
  std::size_t right = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    int pred = probs[i] >= 0.5 ? 1 : 0;
    if (pred == records[i].label) ++right;
  }
  return static_cast<double>(right) / static_cast<double>(records.size());
}

}  // namespace

TEST_CASE("architecture name mapping") {
  CHECK(to_string(Architecture::CNN) == "cnn");
  CHECK(to_string(Architecture::BILSTM) == "bilstm");
  CHECK(architecture_from_string("ann") == Architecture::ANN);
  CHECK(architecture_from_string("lstm") == Architecture::LSTM);
  CHECK_THROWS_AS(architecture_from_string("transformer"), ConfigError);
}

TEST_CASE("binary_cross_entropy matches pinned values") {
  CHECK(binary_cross_entropy(1, 1.0) <= 1.2e-7);
  CHECK(binary_cross_entropy(1, 0.5) == doctest::Approx(0.693147).epsilon(1e-5));
  CHECK(binary_cross_entropy(0, 0.9) == doctest::Approx(2.302585).epsilon(1e-5));
}

TEST_CASE("binary_cross_entropy is strictly decreasing in p for y=1") {
  double prev = binary_cross_entropy(1, 0.01);
  for (double p = 0.02; p < 1.0; p += 0.01) {
    double cur = binary_cross_entropy(1, p);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("binary_cross_entropy matches the formula") {
  Rng rng(fnv1a64("bce"));
  for (int i = 0; i < 500; ++i) {
    double p = 0.001 + rng.next_double() * 0.998;
    CHECK(binary_cross_entropy(1, p) == doctest::Approx(-std::log(p)).epsilon(1e-9));
    CHECK(binary_cross_entropy(0, p) == doctest::Approx(-std::log(1.0 - p)).epsilon(1e-9));
  }
}

TEST_CASE("classify respects the threshold boundary") {
  CHECK(classify(0.7) == Label::FAKE);
  CHECK(classify(0.5) == Label::FAKE);
  CHECK(classify(0.49) == Label::REAL);
  CHECK(classify(0.8, 0.9) == Label::REAL);
  // monotone in threshold: raising it never flips REAL back to FAKE
  for (double p : {0.1, 0.4, 0.6, 0.9}) {
    bool seen_real = false;
    for (double t = 0.05; t < 1.0; t += 0.05) {
      bool is_real = classify(p, t) == Label::REAL;
      if (seen_real) CHECK(is_real);
      seen_real = seen_real || is_real;
    }
  }
}

TEST_CASE("sigmoid_scalar midpoint and symmetry") {
  CHECK(sigmoid_scalar(0.0) == doctest::Approx(0.5));
  CHECK(sigmoid_scalar(3.0) + sigmoid_scalar(-3.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sigmoid_scalar(1000.0) == doctest::Approx(1.0));
  CHECK(sigmoid_scalar(-1000.0) == doctest::Approx(0.0));
}

TEST_CASE("attention_pool reproduces single state and convex weights") {
  Eigen::VectorXd s1(3);
  s1 << 1.0, -2.0, 0.5;
  Eigen::VectorXd w(3);
  w << 0.3, 0.1, -0.2;
  auto out = attention_pool({s1}, w);
  CHECK((out - s1).norm() == doctest::Approx(0.0));

  Eigen::VectorXd s2(3);
  s2 << -1.0, 0.0, 2.0;
  std::vector<double> weights;
  auto pooled = attention_pool({s1, s2}, w, &weights);
  REQUIRE(weights.size() == 2);
  CHECK(weights[0] >= 0.0);
  CHECK(weights[1] >= 0.0);
  CHECK(weights[0] + weights[1] == doctest::Approx(1.0).epsilon(1e-6));
  auto manual = (weights[0] * s1 + weights[1] * s2).eval();
  CHECK((pooled - manual).norm() < 1e-9);
}

TEST_CASE("attention_pool with uniform scores reduces to the mean") {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(4);
  std::vector<Eigen::VectorXd> states;
  Rng rng(11);
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd s(4);
    for (int j = 0; j < 4; ++j) s(j) = rng.next_double();
    states.push_back(s);
  }
  auto pooled = attention_pool(states, w);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  for (const auto& s : states) mean += s;
  mean /= 5.0;
  CHECK((pooled - mean).norm() < 1e-12);
}

TEST_CASE("forward emits probabilities in (0,1) for every architecture") {
  auto records = testsupport::separable_records(8, 12, 8, 3);
  std::vector<FeatureRecord> recs(records.begin(), records.begin() + 8);
  for (auto arch : {Architecture::ANN, Architecture::LSTM, Architecture::BILSTM,
                    Architecture::CNN}) {
    Model model(small_config(arch), small_spec());
    auto probs = model.predict_proba(recs);
    REQUIRE(probs.size() == recs.size());
    for (double p : probs) {
      CHECK(p > 0.0);
      CHECK(p < 1.0);
    }
  }
}

TEST_CASE("CNN forward handles a full-size batch shape") {
  ModelConfig cfg = small_config(Architecture::CNN);
  cfg.conv_kernel = 5;
  InputSpec spec;
  spec.seq_len = 512;
  spec.emb_dim = 768;
  Model model(cfg, spec);

  std::vector<FeatureRecord> batch(8);
  Rng rng(4);
  for (auto& rec : batch) {
    rec.sequence = Eigen::MatrixXf::Zero(512, 768);
    for (int r = 0; r < 40; ++r) {
      for (int c = 0; c < 768; ++c) {
        rec.sequence(r, c) = static_cast<float>(rng.next_double() - 0.5);
      }
    }
    rec.stance = rng.next_double();
    rec.label = static_cast<int>(rng.below(2));
  }
  std::vector<const FeatureRecord*> ptrs;
  for (auto& rec : batch) ptrs.push_back(&rec);

  nn::Graph g;
  auto* logits = model.forward(g, ptrs, false, nullptr);
  CHECK(logits->rows() == 8);
  CHECK(logits->cols() == 1);
}

TEST_CASE("identical config and seed give identical initial weights") {
  for (auto arch : {Architecture::ANN, Architecture::CNN}) {
    Model a(small_config(arch, 99), small_spec());
    Model b(small_config(arch, 99), small_spec());
    auto pa = a.own_parameters();
    auto pb = b.own_parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i]->name == pb[i]->name);
      CHECK((pa[i]->value - pb[i]->value).norm() == 0.0);
    }
    Model c(small_config(arch, 100), small_spec());
    double diff = 0.0;
    auto pc = c.own_parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) {
      diff += (pa[i]->value - pc[i]->value).norm();
    }
    CHECK(diff > 0.0);
  }
}

TEST_CASE("training separates a separable set quickly") {
  auto records = testsupport::separable_records(64, 12, 8, 5);
  std::vector<FeatureRecord> train_set(records.begin(), records.begin() + 48);
  std::vector<FeatureRecord> val_set(records.begin() + 48, records.end());

  Model model(small_config(Architecture::ANN, 7), small_spec());
  auto history = train(model, train_set, val_set, fast_hp());
  CHECK(history.epochs.size() <= 20);
  CHECK(trained_accuracy(model, records) == doctest::Approx(1.0));
  CHECK(history.best_epoch >= 1);
}

TEST_CASE("training is reproducible for a fixed seed") {
  auto records = testsupport::separable_records(40, 12, 8, 6);
  std::vector<FeatureRecord> train_set(records.begin(), records.begin() + 32);
  std::vector<FeatureRecord> val_set(records.begin() + 32, records.end());

  auto hp = fast_hp();
  hp.max_epochs = 5;
  Model a(small_config(Architecture::LSTM, 21), small_spec());
  auto ha = train(a, train_set, val_set, hp);
  Model b(small_config(Architecture::LSTM, 21), small_spec());
  auto hb = train(b, train_set, val_set, hp);

  REQUIRE(ha.epochs.size() == hb.epochs.size());
  for (std::size_t i = 0; i < ha.epochs.size(); ++i) {
    CHECK(ha.epochs[i].train_loss == hb.epochs[i].train_loss);
    CHECK(ha.epochs[i].val_loss == hb.epochs[i].val_loss);
  }
  auto pa = a.predict_proba(records);
  auto pb = b.predict_proba(records);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
}

TEST_CASE("first epoch loss on random balanced data is near ln 2") {
  Rng rng(fnv1a64("random-labels"));
  std::vector<FeatureRecord> records;
  for (int i = 0; i < 64; ++i) {
    FeatureRecord rec;
    rec.sequence = Eigen::MatrixXf(12, 8);
    for (int r = 0; r < 12; ++r) {
      for (int c = 0; c < 8; ++c) {
        rec.sequence(r, c) = static_cast<float>(rng.next_double() - 0.5);
      }
    }
    rec.stance = rng.next_double() * 2.0 - 1.0;
    rec.label = i % 2;
    records.push_back(rec);
  }
  std::vector<FeatureRecord> train_set(records.begin(), records.begin() + 48);
  std::vector<FeatureRecord> val_set(records.begin() + 48, records.end());

  auto hp = fast_hp();
  hp.max_epochs = 1;
  hp.learning_rate = 1e-4;
  Model model(small_config(Architecture::ANN, 13), small_spec());
  auto history = train(model, train_set, val_set, hp);
  REQUIRE(history.epochs.size() == 1);
  CHECK(history.epochs[0].train_loss == doctest::Approx(std::log(2.0)).epsilon(0.22));
}

TEST_CASE("early stopping keeps the best epoch at minimal val loss") {
  auto records = testsupport::separable_records(48, 12, 8, 8);
  std::vector<FeatureRecord> train_set(records.begin(), records.begin() + 36);
  std::vector<FeatureRecord> val_set(records.begin() + 36, records.end());

  auto hp = fast_hp();
  hp.max_epochs = 12;
  hp.early_stop_patience = 3;
  Model model(small_config(Architecture::CNN, 17), small_spec());
  auto history = train(model, train_set, val_set, hp);
  REQUIRE(history.best_epoch >= 1);
  double best = history.epochs[static_cast<std::size_t>(history.best_epoch - 1)].val_loss;
  for (const auto& e : history.epochs) {
    CHECK(best <= e.val_loss + 1e-12);
  }
}

TEST_CASE("training throws TrainingError naming the epoch when loss diverges") {
  auto records = testsupport::separable_records(32, 12, 8, 9);
  for (auto& rec : records) {
    rec.stance = std::numeric_limits<double>::quiet_NaN();
  }
  std::vector<FeatureRecord> train_set(records.begin(), records.begin() + 24);
  std::vector<FeatureRecord> val_set(records.begin() + 24, records.end());

  Model model(small_config(Architecture::ANN, 19), small_spec());
  try {
    train(model, train_set, val_set, fast_hp());
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("predict_proba handles empty input and duplicates") {
  Model model(small_config(Architecture::ANN, 23), small_spec());
  CHECK(model.predict_proba({}).empty());

  auto records = testsupport::separable_records(3, 12, 8, 10);
  std::vector<FeatureRecord> dup{records[0], records[1], records[0]};
  auto probs = model.predict_proba(dup);
  REQUIRE(probs.size() == 3);
  // row position inside a batched matmul can shift the last bits
  CHECK(probs[0] == doctest::Approx(probs[2]).epsilon(1e-12));

  // identical batch composition is bitwise reproducible
  auto again = model.predict_proba(dup);
  for (std::size_t i = 0; i < probs.size(); ++i) CHECK(probs[i] == again[i]);
}

TEST_CASE("predict_proba is invariant to batch size") {
  auto records = testsupport::separable_records(21, 12, 8, 12);
  Model model(small_config(Architecture::BILSTM, 29), small_spec());
  auto a = model.predict_proba(records, 4);
  auto b = model.predict_proba(records, 128);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("save and reload reproduce probabilities bitwise") {
  auto records = testsupport::separable_records(24, 12, 8, 14);
  std::vector<FeatureRecord> train_set(records.begin(), records.begin() + 16);
  std::vector<FeatureRecord> val_set(records.begin() + 16, records.end());

  auto hp = fast_hp();
  hp.max_epochs = 3;
  Model model(small_config(Architecture::CNN, 31), small_spec());
  model.encoder_fingerprint = "cafebabe";
  train(model, train_set, val_set, hp);

  auto dir = testsupport::temp_dir("model-save");
  save_model(model, dir);
  auto loaded = load_model(dir);
  CHECK(loaded->config().architecture == Architecture::CNN);
  CHECK(loaded->input_spec().seq_len == 12);
  CHECK(loaded->encoder_fingerprint == "cafebabe");
  CHECK(model_version(*loaded) == model_version(model));

  auto before = model.predict_proba(records);
  auto after = loaded->predict_proba(records);
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(before[i] == after[i]);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("model_version changes when a weight changes") {
  Model model(small_config(Architecture::ANN, 37), small_spec());
  auto v1 = model_version(model);
  model.own_parameters().front()->value(0, 0) += 1.0;
  CHECK(model_version(model) != v1);
}

TEST_CASE("use_stance=false makes predictions stance-invariant") {
  auto records = testsupport::separable_records(16, 12, 8, 15);
  ModelConfig cfg = small_config(Architecture::ANN, 41);
  cfg.use_stance = false;
  InputSpec spec = small_spec();
  spec.stance = false;
  Model model(cfg, spec);

  auto probs = model.predict_proba(records);
  auto shuffled = records;
  Rng rng(77);
  std::vector<double> stances;
  for (const auto& r : records) stances.push_back(r.stance);
  rng.shuffle(stances);
  for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].stance = stances[i];
  auto probs2 = model.predict_proba(shuffled);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    CHECK(probs[i] == probs2[i]);
  }
}

TEST_CASE("stance-aware model reacts to the stance input") {
  auto records = testsupport::separable_records(4, 12, 8, 16);
  Model model(small_config(Architecture::ANN, 43), small_spec());
  auto base = model.predict_proba(records);
  auto moved = records;
  for (auto& r : moved) r.stance = -r.stance + 0.37;
  auto shifted = model.predict_proba(moved);
  double diff = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) diff += std::abs(base[i] - shifted[i]);
  CHECK(diff > 0.0);
}

TEST_CASE("token-id records train against an owned embedding table") {
  auto records = testsupport::separable_token_records(48, 10, 40, 18);
  std::vector<FeatureRecord> train_set(records.begin(), records.begin() + 36);
  std::vector<FeatureRecord> val_set(records.begin() + 36, records.end());

  ModelConfig cfg = small_config(Architecture::ANN, 47);
  InputSpec spec;
  spec.seq_len = 10;
  spec.emb_dim = 8;
  spec.vocab_rows = 40;
  Model model(cfg, spec);
  auto hp = fast_hp();
  train(model, train_set, val_set, hp);
  CHECK(trained_accuracy(model, records) >= 0.95);
}

TEST_CASE("mismatched record shape is rejected") {
  Model model(small_config(Architecture::ANN, 53), small_spec());
  FeatureRecord bad;
  bad.sequence = Eigen::MatrixXf::Zero(5, 8);  // seq_len should be 12
  bad.stance = 0.0;
  CHECK_THROWS_AS(model.predict_proba({bad}), InferenceError);
}

TEST_CASE("ModelConfig and TrainHyperparams json roundtrip") {
  ModelConfig cfg = small_config(Architecture::BILSTM, 61);
  cfg.use_attention = true;
  cfg.use_stance = false;
  auto back = ModelConfig::from_json(cfg.to_json());
  CHECK(back.architecture == cfg.architecture);
  CHECK(back.recurrent_units == cfg.recurrent_units);
  CHECK(back.conv_kernel == cfg.conv_kernel);
  CHECK(back.conv_filters == cfg.conv_filters);
  CHECK(back.dense_units == cfg.dense_units);
  CHECK(back.use_attention == cfg.use_attention);
  CHECK(back.use_stance == cfg.use_stance);
  CHECK(back.dropout == cfg.dropout);
  CHECK(back.seed == cfg.seed);

  TrainHyperparams hp = fast_hp();
  auto hp_back = TrainHyperparams::from_json(hp.to_json());
  CHECK(hp_back.batch_size == hp.batch_size);
  CHECK(hp_back.max_epochs == hp.max_epochs);
  CHECK(hp_back.learning_rate == hp.learning_rate);
  CHECK(hp_back.early_stop_patience == hp.early_stop_patience);
}

TEST_CASE("attention variant trains and predicts") {
  auto records = testsupport::separable_records(32, 12, 8, 19);
  std::vector<FeatureRecord> train_set(records.begin(), records.begin() + 24);
  std::vector<FeatureRecord> val_set(records.begin() + 24, records.end());
  ModelConfig cfg = small_config(Architecture::LSTM, 67);
  cfg.use_attention = true;
  Model model(cfg, small_spec());
  auto hp = fast_hp();
  hp.max_epochs = 8;
  train(model, train_set, val_set, hp);
  auto probs = model.predict_proba(val_set);
  for (double p : probs) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
}
