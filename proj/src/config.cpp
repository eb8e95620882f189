#include "dkf/config.hpp"

#include "dkf/errors.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace dkf::harness {
namespace {

struct Value {
  enum class Kind { kNumber, kWord, kList };
  Kind kind = Kind::kNumber;
  double number = 0.0;
  std::string word;
  std::vector<Value> items;
};

struct Entry {
  Value value;
  int line = 0;
  mutable bool used = false;
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

class ValueParser {
 public:
  ValueParser(std::string_view text, std::string key, int line)
      : text_(text), key_(std::move(key)), line_(line) {}

  Value parse() {
    Value v = parse_value();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing text '" + std::string(text_.substr(pos_)) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(key_, line_, what); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  Value parse_value() {
    skip_ws();
    if (pos_ >= text_.size()) fail("missing value");
    if (text_[pos_] == '[') return parse_list();
    return parse_atom();
  }

  Value parse_list() {
    Value v;
    v.kind = Value::Kind::kList;
    ++pos_;  // '['
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return v;
    }
    while (true) {
      v.items.push_back(parse_value());
      skip_ws();
      if (pos_ >= text_.size()) fail("unterminated list");
      if (text_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (text_[pos_] == ']') {
        ++pos_;
        return v;
      }
      fail(std::string("expected ',' or ']' but found '") + text_[pos_] + "'");
    }
  }

  Value parse_atom() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' &&
           text_[pos_] != '[' && !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    const std::string token(text_.substr(start, pos_ - start));
    if (token.empty()) fail("empty value");
    const char c = token.front();
    Value v;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      v.kind = Value::Kind::kNumber;
      v.number = parse_number(token);
    } else {
      v.kind = Value::Kind::kWord;
      v.word = token;
    }
    return v;
  }

  double parse_number(const std::string& token) const {
    const auto slash = token.find('/');
    if (slash != std::string::npos) {
      const double num = parse_plain(token.substr(0, slash));
      const double den = parse_plain(token.substr(slash + 1));
      if (den == 0.0) fail("division by zero in '" + token + "'");
      return num / den;
    }
    return parse_plain(token);
  }

  double parse_plain(const std::string& token) const {
    char* end = nullptr;
    const double x = std::strtod(token.c_str(), &end);
    if (token.empty() || end != token.c_str() + token.size()) {
      fail("invalid number '" + token + "'");
    }
    return x;
  }

  std::string_view text_;
  std::string key_;
  int line_;
  std::size_t pos_ = 0;
};

int bracket_depth(std::string_view s) {
  int depth = 0;
  for (char c : s) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
  }
  return depth;
}

std::map<std::string, Entry> parse_entries(std::string_view text) {
  std::map<std::string, Entry> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", line_no, "expected 'key = value', got '" + trim(line) + "'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError("", line_no, "missing key before '='");
    std::string value = line.substr(eq + 1);
    const int start_line = line_no;
    while (bracket_depth(value) > 0) {
      if (!std::getline(in, raw)) throw ConfigError(key, start_line, "unterminated list");
      ++line_no;
      value += " " + raw.substr(0, raw.find('#'));
    }
    if (bracket_depth(value) < 0) throw ConfigError(key, start_line, "unbalanced ']'");
    if (entries.count(key)) throw ConfigError(key, start_line, "duplicate key");
    Entry e;
    e.value = ValueParser(value, key, start_line).parse();
    e.line = start_line;
    entries.emplace(key, std::move(e));
  }
  return entries;
}

class Lookup {
 public:
  explicit Lookup(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  const Entry* find(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  const Entry& require(const std::string& key) const {
    const Entry* e = find(key);
    if (!e) throw ConfigError(key, 0, "required key is missing");
    return *e;
  }

  /// sensor.<i>.<field> falling back to sensor.*.<field>; i is 1-based.
  const Entry* find_sensor(int i, const std::string& field) const {
    if (const Entry* e = find(fmt::format("sensor.{}.{}", i, field))) return e;
    return find("sensor.*." + field);
  }

  std::string sensor_key(int i, const std::string& field) const {
    const std::string specific = fmt::format("sensor.{}.{}", i, field);
    return entries_.count(specific) ? specific : "sensor.*." + field;
  }

  void reject_unused() const {
    for (const auto& [key, e] : entries_) {
      if (!e.used) throw ConfigError(key, e.line, "unknown key");
    }
  }

 private:
  std::map<std::string, Entry> entries_;
};

double as_number(const Entry& e, const std::string& key) {
  if (e.value.kind != Value::Kind::kNumber) throw ConfigError(key, e.line, "expected a number");
  return e.value.number;
}

long as_integer(const Entry& e, const std::string& key) {
  const double x = as_number(e, key);
  if (x != static_cast<double>(static_cast<long>(x))) {
    throw ConfigError(key, e.line, "expected an integer");
  }
  return static_cast<long>(x);
}

std::string as_word(const Entry& e, const std::string& key) {
  if (e.value.kind != Value::Kind::kWord) throw ConfigError(key, e.line, "expected a word");
  return e.value.word;
}

std::vector<double> flat_numbers(const Value& v, const std::string& key, int line) {
  std::vector<double> out;
  for (const auto& item : v.items) {
    if (item.kind != Value::Kind::kNumber) throw ConfigError(key, line, "expected a list of numbers");
    out.push_back(item.number);
  }
  return out;
}

/// Vector of `size` entries; a bare number is broadcast.
Vector as_vector(const Entry& e, const std::string& key, int size) {
  if (e.value.kind == Value::Kind::kNumber) return Vector::Constant(size, e.value.number);
  if (e.value.kind != Value::Kind::kList) throw ConfigError(key, e.line, "expected a vector");
  const auto xs = flat_numbers(e.value, key, e.line);
  if (static_cast<int>(xs.size()) != size) {
    throw ConfigError(key, e.line,
                      fmt::format("expected {} entries, got {}", size, xs.size()));
  }
  return Eigen::Map<const Vector>(xs.data(), size);
}

/// Matrix with `rows` rows. `cols < 0` accepts any column count. A bare
/// number means number * I (square only); a flat list is a column.
Matrix as_matrix(const Entry& e, const std::string& key, int rows, int cols,
                 bool scalar_identity) {
  const Value& v = e.value;
  if (v.kind == Value::Kind::kNumber) {
    if (!scalar_identity || cols != rows) throw ConfigError(key, e.line, "expected a matrix");
    return v.number * Matrix::Identity(rows, rows);
  }
  if (v.kind != Value::Kind::kList) throw ConfigError(key, e.line, "expected a matrix");
  const bool nested = !v.items.empty() && v.items.front().kind == Value::Kind::kList;
  if (!nested) {
    const auto xs = flat_numbers(v, key, e.line);
    if (static_cast<int>(xs.size()) != rows || (cols >= 0 && cols != 1)) {
      throw ConfigError(key, e.line, fmt::format("expected a {}x{} matrix as a list of rows",
                                                 rows, cols < 0 ? rows : cols));
    }
    return Eigen::Map<const Vector>(xs.data(), rows);
  }
  if (static_cast<int>(v.items.size()) != rows) {
    throw ConfigError(key, e.line, fmt::format("expected {} rows, got {}", rows, v.items.size()));
  }
  const int width = cols >= 0 ? cols : static_cast<int>(v.items.front().items.size());
  Matrix out(rows, width);
  for (int i = 0; i < rows; ++i) {
    const auto& row = v.items[static_cast<std::size_t>(i)];
    if (row.kind != Value::Kind::kList) throw ConfigError(key, e.line, "expected a list of rows");
    const auto xs = flat_numbers(row, key, e.line);
    if (static_cast<int>(xs.size()) != width) {
      throw ConfigError(key, e.line,
                        fmt::format("row {} has {} entries, expected {}", i + 1, xs.size(), width));
    }
    for (int j = 0; j < width; ++j) out(i, j) = xs[static_cast<std::size_t>(j)];
  }
  return out;
}

/// Per-sensor scalars: a bare number for all sensors or a list of n.
std::vector<double> per_sensor(const Entry& e, const std::string& key, int n) {
  if (e.value.kind == Value::Kind::kNumber) return std::vector<double>(static_cast<std::size_t>(n), e.value.number);
  const Vector v = as_vector(e, key, n);
  return {v.data(), v.data() + v.size()};
}

bool is_scalar(const Entry& e) { return e.value.kind == Value::Kind::kNumber; }

void require_spd(const Matrix& M, const std::string& key, int line) {
  if (!linalg::is_symmetric(M, 1e-12) || !(linalg::min_eigenvalue(M) > 0.0)) {
    throw ConfigError(key, line, "must be symmetric positive definite");
  }
}

void require_psd(const Matrix& M, const std::string& key, int line) {
  try {
    signal::psd_sqrt(M);
  } catch (const Error& err) {
    throw ConfigError(key, line, err.what());
  }
}

}  // namespace

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::kDistributed: return "distributed";
    case Mode::kNoncooperative: return "noncooperative";
    case Mode::kBoth: return "both";
  }
  return "unknown";
}

bool includes_distributed(Mode mode) { return mode != Mode::kNoncooperative; }
bool includes_noncooperative(Mode mode) { return mode != Mode::kDistributed; }

kalman::SensorFilterState ExperimentConfig::initial_state(int i) const {
  const auto idx = static_cast<std::size_t>(i);
  return {theta_hat0.at(idx), P0.at(idx), r.at(idx), Q};
}

std::vector<kalman::SensorFilterState> ExperimentConfig::initial_states() const {
  std::vector<kalman::SensorFilterState> out;
  for (int i = 0; i < n; ++i) out.push_back(initial_state(i));
  return out;
}

ExperimentConfig parse_config(std::string_view text) {
  Lookup cfg(parse_entries(text));
  ExperimentConfig c;

  c.n = static_cast<int>(as_integer(cfg.require("n"), "n"));
  c.m = static_cast<int>(as_integer(cfg.require("m"), "m"));
  if (c.n < 1) throw ConfigError("n", cfg.require("n").line, "must be >= 1");
  if (c.m < 1) throw ConfigError("m", cfg.require("m").line, "must be >= 1");
  const int n = c.n, m = c.m;

  if (const Entry* e = cfg.find("mode")) {
    const std::string w = as_word(*e, "mode");
    if (w == "distributed") c.mode = Mode::kDistributed;
    else if (w == "noncooperative") c.mode = Mode::kNoncooperative;
    else if (w == "both") c.mode = Mode::kBoth;
    else throw ConfigError("mode", e->line, "expected distributed, noncooperative or both");
  }
  if (const Entry* e = cfg.find("noise_scale")) {
    const std::string w = as_word(*e, "noise_scale");
    if (w == "variance") c.noise_scale = NoiseScale::kVariance;
    else if (w == "std") c.noise_scale = NoiseScale::kStdDev;
    else throw ConfigError("noise_scale", e->line, "expected variance or std");
  }
  // Scalar shorthands for Gaussian spreads are variances unless noise_scale = std.
  auto spread = [&](double s) { return c.noise_scale == NoiseScale::kStdDev ? s * s : s; };

  if (const Entry* e = cfg.find("adjacency")) {
    c.adjacency = as_matrix(*e, "adjacency", n, n, false);
  } else if (includes_distributed(c.mode)) {
    throw ConfigError("adjacency", 0, "required key is missing");
  } else {
    c.adjacency = Matrix::Identity(n, n);
  }

  c.signal.theta0 = Vector::Ones(m);
  if (const Entry* e = cfg.find("theta0")) c.signal.theta0 = as_vector(*e, "theta0", m);
  {
    const Entry& e = cfg.require("delta_cov");
    c.signal.delta_cov = is_scalar(e) ? Matrix(spread(e.value.number) * Matrix::Identity(m, m))
                                      : as_matrix(e, "delta_cov", m, m, false);
    require_psd(c.signal.delta_cov, "delta_cov", e.line);
  }

  signal::NoiseKind kind = signal::NoiseKind::kGaussian;
  if (const Entry* e = cfg.find("noise_kind")) {
    const std::string w = as_word(*e, "noise_kind");
    if (w == "gaussian") kind = signal::NoiseKind::kGaussian;
    else if (w == "zero") kind = signal::NoiseKind::kZero;
    else throw ConfigError("noise_kind", e->line, "expected gaussian or zero");
  }
  {
    const Entry& e = cfg.require("noise_var");
    for (double v : per_sensor(e, "noise_var", n)) {
      if (v < 0.0) throw ConfigError("noise_var", e.line, "must be nonnegative");
      c.signal.noise.push_back({spread(v), kind});
    }
  }

  for (int i = 1; i <= n; ++i) {
    signal::GeneratorMatrices g;
    auto need = [&](const std::string& field) -> const Entry& {
      const Entry* e = cfg.find_sensor(i, field);
      if (!e) throw ConfigError(fmt::format("sensor.{}.{}", i, field), 0, "required key is missing");
      return *e;
    };
    g.A = as_matrix(need("A"), cfg.sensor_key(i, "A"), m, m, false);
    g.B = as_matrix(need("B"), cfg.sensor_key(i, "B"), m, -1, false);
    g.C = as_matrix(need("C"), cfg.sensor_key(i, "C"), m, m, false);
    const auto p = static_cast<int>(g.B.cols());
    g.innovation_cov = Matrix::Identity(p, p);
    if (const Entry* e = cfg.find_sensor(i, "innovation_cov")) {
      const std::string key = cfg.sensor_key(i, "innovation_cov");
      g.innovation_cov = is_scalar(*e) ? Matrix(spread(e->value.number) * Matrix::Identity(p, p))
                                       : as_matrix(*e, key, p, p, false);
      require_psd(g.innovation_cov, key, e->line);
    }
    Vector x0 = Vector::Ones(m);
    if (const Entry* e = cfg.find_sensor(i, "x0")) x0 = as_vector(*e, cfg.sensor_key(i, "x0"), m);
    c.signal.generators.push_back(std::move(g));
    c.signal.x0.push_back(std::move(x0));
  }

  {
    const Entry& e = cfg.require("r");
    c.r = per_sensor(e, "r", n);
    for (double r : c.r) {
      if (!(r > 0.0)) throw ConfigError("r", e.line, "must be positive");
    }
  }
  {
    const Entry& e = cfg.require("Q");
    c.Q = as_matrix(e, "Q", m, m, true);
    require_spd(c.Q, "Q", e.line);
  }
  {
    Matrix P0 = Matrix::Identity(m, m);
    if (const Entry* e = cfg.find("P0")) {
      P0 = as_matrix(*e, "P0", m, m, true);
      require_spd(P0, "P0", e->line);
    }
    c.P0.assign(static_cast<std::size_t>(n), P0);
  }
  {
    Vector th = Vector::Zero(m);
    if (const Entry* e = cfg.find("theta_hat0")) th = as_vector(*e, "theta_hat0", m);
    c.theta_hat0.assign(static_cast<std::size_t>(n), th);
  }

  auto int_key = [&](const char* key, auto& field, long minimum) {
    if (const Entry* e = cfg.find(key)) {
      const long v = as_integer(*e, key);
      if (v < minimum) throw ConfigError(key, e->line, fmt::format("must be >= {}", minimum));
      field = static_cast<std::remove_reference_t<decltype(field)>>(v);
    }
  };
  int_key("horizon", c.horizon, 1);
  int_key("runs", c.runs, 1);
  int_key("record_stride", c.record_stride, 1);
  int_key("workers", c.workers, 1);
  int_key("diag_h", c.diag_h, 1);
  int_key("diag_mc", c.diag_mc, 1);
  if (const Entry* e = cfg.find("seed")) {
    const double s = as_number(*e, "seed");
    if (s < 0 || s != static_cast<double>(static_cast<std::uint64_t>(s))) {
      throw ConfigError("seed", e->line, "expected a nonnegative integer");
    }
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (const Entry* e = cfg.find("retain_traces")) {
    const std::string w = as_word(*e, "retain_traces");
    if (w != "true" && w != "false") throw ConfigError("retain_traces", e->line, "expected true or false");
    c.retain_traces = w == "true";
  }

  cfg.reject_unused();

  if (includes_distributed(c.mode)) {
    const auto report = graph::validate(graph::AdjacencyMatrix(c.adjacency));
    if (!report.ok()) {
      const Entry* e = cfg.find("adjacency");
      throw ConfigError("adjacency", e ? e->line : 0,
                        "graph check failed: " + report.first_failure());
    }
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void validate_config(const ExperimentConfig& c) {
  const auto n = static_cast<std::size_t>(c.n);
  if (c.n < 1 || c.m < 1) throw ConfigError("n", 0, "n and m must be >= 1");
  if (c.horizon < 1) throw ConfigError("horizon", 0, "must be >= 1");
  if (c.runs < 1) throw ConfigError("runs", 0, "must be >= 1");
  if (c.record_stride < 1) throw ConfigError("record_stride", 0, "must be >= 1");
  if (c.workers < 1) throw ConfigError("workers", 0, "must be >= 1");
  if (c.adjacency.rows() != c.n || c.adjacency.cols() != c.n) {
    throw ConfigError("adjacency", 0, "must be n x n");
  }
  if (c.signal.generators.size() != n || c.signal.x0.size() != n ||
      c.signal.noise.size() != n || c.r.size() != n || c.P0.size() != n ||
      c.theta_hat0.size() != n) {
    throw ConfigError("sensor", 0, "per-sensor settings do not cover all n sensors");
  }
  if (c.signal.theta0.size() != c.m) throw ConfigError("theta0", 0, "must have m entries");
  for (std::size_t i = 0; i < n; ++i) {
    try {
      signal::check_dimensions(c.signal.generators[i], c.m);
    } catch (const DimensionError& e) {
      throw ConfigError(fmt::format("sensor.{}", i + 1), 0, e.what());
    }
  }
  if (includes_distributed(c.mode)) {
    const auto report = graph::validate(graph::AdjacencyMatrix(c.adjacency));
    if (!report.ok()) {
      throw ConfigError("adjacency", 0, "graph check failed: " + report.first_failure());
    }
  }
  for (int i = 0; i < c.n; ++i) {
    try {
      kalman::check_state(c.initial_state(i));
    } catch (const Error& e) {
      throw ConfigError("filter priors", 0, e.what());
    }
  }
}

namespace {

void put_matrix(std::ostringstream& out, const char* key, const Matrix& M) {
  out << key << " = [";
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    out << (i ? ", [" : "[");
    for (Eigen::Index j = 0; j < M.cols(); ++j) out << (j ? ", " : "") << fmt::format("{:.17g}", M(i, j));
    out << "]";
  }
  out << "]\n";
}

}  // namespace

std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "n = " << c.n << "\nm = " << c.m << "\n";
  put_matrix(out, "adjacency", c.adjacency);
  put_matrix(out, "theta0", c.signal.theta0);
  put_matrix(out, "delta_cov", c.signal.delta_cov);
  for (int i = 0; i < c.n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const auto& g = c.signal.generators[idx];
    out << "sensor " << i + 1 << "\n";
    put_matrix(out, "A", g.A);
    put_matrix(out, "B", g.B);
    put_matrix(out, "C", g.C);
    put_matrix(out, "innovation_cov", g.innovation_cov);
    put_matrix(out, "x0", c.signal.x0[idx]);
    out << fmt::format("noise = {:.17g} {}\n", c.signal.noise[idx].variance,
                       c.signal.noise[idx].kind == signal::NoiseKind::kZero ? "zero" : "gaussian");
    out << fmt::format("r = {:.17g}\n", c.r[idx]);
    put_matrix(out, "P0", c.P0[idx]);
    put_matrix(out, "theta_hat0", c.theta_hat0[idx]);
  }
  put_matrix(out, "Q", c.Q);
  out << "horizon = " << c.horizon << "\nruns = " << c.runs
      << "\nrecord_stride = " << c.record_stride << "\nseed = " << c.seed
      << "\nmode = " << mode_name(c.mode) << "\n";
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical_text(config)) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<long> record_schedule(long horizon, long stride) {
  std::vector<long> ks{1};
  for (long k = stride; k <= horizon; k += stride) {
    if (k > 1) ks.push_back(k);
  }
  if (ks.back() != horizon && horizon > 1) ks.push_back(horizon);
  return ks;
}

}  // namespace dkf::harness
