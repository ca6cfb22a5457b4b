#include "stancecred/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "stancecred/errors.hpp"
#include "stancecred/util.hpp"

namespace stancecred {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
      return false;
  return true;
}

/// Strips a trailing comment that starts outside of a quoted string.
std::string strip_comment(const std::string& line) {
  bool in_quote = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_quote = !in_quote;
    if (line[i] == '#' && !in_quote) return line.substr(0, i);
  }
  return line;
}

std::string unescape(const std::string& s, int line_no) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out.push_back(s[i]);
      continue;
    }
    if (++i >= s.size()) throw ConfigError("dangling escape on line " + std::to_string(line_no));
    switch (s[i]) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case '"': out.push_back('"'); break;
      case '\\': out.push_back('\\'); break;
      default:
        throw ConfigError("unsupported escape '\\" + std::string(1, s[i]) + "' on line " +
                          std::to_string(line_no));
    }
  }
  return out;
}

/// Parses one TOML value token into its stored (unquoted) form.
std::string parse_value(const std::string& raw, int line_no) {
  if (raw.empty()) throw ConfigError("missing value on line " + std::to_string(line_no));
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"')
      throw ConfigError("unterminated string on line " + std::to_string(line_no));
    return unescape(raw.substr(1, raw.size() - 2), line_no);
  }
  if (raw == "true" || raw == "false") return raw;
  // numeric: integer or float
  const std::string t = raw;
  char* end = nullptr;
  std::strtod(t.c_str(), &end);
  if (end == t.c_str() + t.size() && end != t.c_str()) return t;
  throw ConfigError("unrecognized value '" + raw + "' on line " + std::to_string(line_no) +
                    " (strings must be quoted)");
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("malformed section header on line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section))
        throw ConfigError("invalid section name on line " + std::to_string(line_no));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value on line " + std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key))
      throw ConfigError("invalid key '" + key + "' on line " + std::to_string(line_no));
    if (section.empty())
      throw ConfigError("key outside any [section] on line " + std::to_string(line_no));
    const std::string value = parse_value(trim(line.substr(eq + 1)), line_no);
    map.values_[section + "." + key] = value;
  }
  return map;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
  return parse(read_file(path));
}

void ConfigMap::set(const std::string& dotted_key, const std::string& value) {
  const std::size_t dot = dotted_key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size())
    throw ConfigError("override key must look like section.key, got '" + dotted_key + "'");
  std::string v = trim(value);
  if (!v.empty() && v.front() == '"')
    v = parse_value(v, 0);
  values_[dotted_key] = v;
}

bool ConfigMap::has(const std::string& key) const { return values_.count(key) != 0; }

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::int64_t ConfigMap::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::int64_t out = 0;
  const std::string& s = it->second;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("expected integer for " + key + ", got '" + s + "'");
  return out;
}

double ConfigMap::get_real(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& s = it->second;
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || end == s.c_str())
    throw ConfigError("expected number for " + key + ", got '" + s + "'");
  return out;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true") return true;
  if (it->second == "false") return false;
  throw ConfigError("expected true/false for " + key + ", got '" + it->second + "'");
}

std::string ConfigMap::canonical() const {
  std::ostringstream out;
  std::string section;
  for (const auto& [key, value] : values_) {
    const std::size_t dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << "\n";
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = ";
    // Preserve numerics/booleans verbatim; everything else is quoted.
    if (value == "true" || value == "false") {
      out << value;
    } else {
      char* end = nullptr;
      std::strtod(value.c_str(), &end);
      const bool numeric = !value.empty() && end == value.c_str() + value.size();
      if (numeric) {
        out << value;
      } else {
        out << '"';
        for (char c : value) {
          if (c == '"' || c == '\\') out << '\\';
          if (c == '\n') {
            out << "\\n";
            continue;
          }
          out << c;
        }
        out << '"';
      }
    }
    out << "\n";
  }
  return out.str();
}

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& m) {
  ExperimentConfig c;
  c.dataset_path = m.get_string("dataset.path", c.dataset_path);
  c.max_articles = static_cast<std::size_t>(m.get_int("dataset.max_articles", 0));

  c.backend = m.get_string("encoder.backend", c.backend);
  c.max_len = static_cast<int>(m.get_int("encoder.max_len", c.max_len));
  c.vocab_size = static_cast<std::size_t>(
      m.get_int("encoder.vocab_size", static_cast<std::int64_t>(c.vocab_size)));
  c.embedding_dim = static_cast<int>(m.get_int("encoder.embedding_dim", c.embedding_dim));
  c.vectors_path = m.get_string("encoder.vectors_path", c.vectors_path);
  c.checkpoint_dir = m.get_string("encoder.checkpoint_dir", c.checkpoint_dir);
  c.fine_tune = m.get_bool("encoder.fine_tune", c.fine_tune);
  c.cache_dir = m.get_string("encoder.cache_dir", c.cache_dir);

  c.seed = static_cast<std::uint64_t>(m.get_int("split.seed", 42));
  c.ratios.train = m.get_real("split.train", c.ratios.train);
  c.ratios.val = m.get_real("split.val", c.ratios.val);
  c.ratios.test = m.get_real("split.test", c.ratios.test);
  c.k = static_cast<int>(m.get_int("split.k", c.k));

  c.model.architecture = architecture_from_string(m.get_string("model.architecture", "cnn"));
  c.model.recurrent_units = static_cast<int>(m.get_int("model.recurrent_units", 64));
  c.model.conv_kernel = static_cast<int>(m.get_int("model.conv_kernel", 5));
  c.model.conv_filters = static_cast<int>(m.get_int("model.conv_filters", 64));
  c.model.dense_units = static_cast<int>(m.get_int("model.dense_units", 64));
  c.model.use_attention = m.get_bool("model.use_attention", false);
  c.model.use_stance = m.get_bool("model.use_stance", true);
  c.model.dropout = m.get_real("model.dropout", 0.1);
  c.model.seed = static_cast<std::uint64_t>(m.get_int("model.seed", static_cast<std::int64_t>(c.seed)));

  c.hp.batch_size = static_cast<int>(m.get_int("train.batch_size", 32));
  c.hp.max_epochs = static_cast<int>(m.get_int("train.max_epochs", 20));
  c.hp.learning_rate = m.get_real("train.learning_rate", c.fine_tune ? 1e-5 : 1e-3);
  c.hp.early_stop_patience = static_cast<int>(m.get_int("train.early_stop_patience", 3));

  c.output_dir = m.get_string("output.dir", c.output_dir);
  c.figures = m.get_bool("output.figures", c.figures);
  return c;
}

ConfigMap ExperimentConfig::to_map() const {
  ConfigMap m;
  m.set("dataset.path", dataset_path);
  m.set("dataset.max_articles", std::to_string(max_articles));
  m.set("encoder.backend", backend);
  m.set("encoder.max_len", std::to_string(max_len));
  m.set("encoder.vocab_size", std::to_string(vocab_size));
  m.set("encoder.embedding_dim", std::to_string(embedding_dim));
  m.set("encoder.vectors_path", vectors_path);
  m.set("encoder.checkpoint_dir", checkpoint_dir);
  m.set("encoder.fine_tune", fine_tune ? "true" : "false");
  m.set("encoder.cache_dir", cache_dir);
  m.set("split.seed", std::to_string(seed));
  {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", ratios.train);
    m.set("split.train", buf);
    std::snprintf(buf, sizeof(buf), "%.17g", ratios.val);
    m.set("split.val", buf);
    std::snprintf(buf, sizeof(buf), "%.17g", ratios.test);
    m.set("split.test", buf);
    std::snprintf(buf, sizeof(buf), "%.17g", model.dropout);
    m.set("model.dropout", buf);
    std::snprintf(buf, sizeof(buf), "%.17g", hp.learning_rate);
    m.set("train.learning_rate", buf);
  }
  m.set("split.k", std::to_string(k));
  m.set("model.architecture", to_string(model.architecture));
  m.set("model.recurrent_units", std::to_string(model.recurrent_units));
  m.set("model.conv_kernel", std::to_string(model.conv_kernel));
  m.set("model.conv_filters", std::to_string(model.conv_filters));
  m.set("model.dense_units", std::to_string(model.dense_units));
  m.set("model.use_attention", model.use_attention ? "true" : "false");
  m.set("model.use_stance", model.use_stance ? "true" : "false");
  m.set("model.seed", std::to_string(model.seed));
  m.set("train.batch_size", std::to_string(hp.batch_size));
  m.set("train.max_epochs", std::to_string(hp.max_epochs));
  m.set("train.early_stop_patience", std::to_string(hp.early_stop_patience));
  m.set("output.dir", output_dir);
  m.set("output.figures", figures ? "true" : "false");
  return m;
}

std::string ExperimentConfig::canonical() const { return to_map().canonical(); }

std::string ExperimentConfig::hash() const { return to_hex(fnv1a64(canonical())); }

std::string ExperimentConfig::effective_cache_dir() const {
  const char* env = std::getenv("STANCECRED_CACHE_DIR");
  if (env && *env) return env;
  return cache_dir;
}

void ExperimentConfig::validate() const {
  if (dataset_path.empty()) throw ConfigError("dataset.path is required");
  if (backend != "tokenizer" && backend != "static" && backend != "contextual")
    throw ConfigError("encoder.backend must be tokenizer, static or contextual");
  if (backend == "static" && vectors_path.empty())
    throw ConfigError("encoder.vectors_path is required for the static backend");
  if (backend == "contextual" && checkpoint_dir.empty())
    throw ConfigError("encoder.checkpoint_dir is required for the contextual backend");
  if (fine_tune && backend != "contextual")
    throw ConfigError("encoder.fine_tune applies only to the contextual backend");
  if (max_len < 4) throw ConfigError("encoder.max_len is too small");
  if (embedding_dim <= 0) throw ConfigError("encoder.embedding_dim must be positive");
  if (ratios.train <= 0.0 || ratios.val < 0.0 || ratios.test < 0.0 ||
      ratios.train + ratios.val + ratios.test > 1.0 + 1e-9)
    throw ConfigError("split ratios must be positive and sum to at most 1");
  if (model.dropout < 0.0 || model.dropout >= 1.0)
    throw ConfigError("model.dropout must lie in [0, 1)");
  if (k < 2) throw ConfigError("split.k must be at least 2");
  if (hp.batch_size <= 0 || hp.max_epochs <= 0 || hp.learning_rate <= 0 ||
      hp.early_stop_patience <= 0)
    throw ConfigError("train.* values must be positive");
}

}  // namespace stancecred
