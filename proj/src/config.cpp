#include "dynolearn/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "dynolearn/csv.hpp"
#include "dynolearn/errors.hpp"

namespace dynolearn {

ConfigValue ConfigValue::number(std::string text) {
  ConfigValue v;
  v.kind = Kind::number;
  v.text = std::move(text);
  return v;
}

ConfigValue ConfigValue::string(std::string text) {
  ConfigValue v;
  v.kind = Kind::string;
  v.text = std::move(text);
  return v;
}

ConfigValue ConfigValue::boolean(bool b) {
  ConfigValue v;
  v.kind = Kind::boolean;
  v.flag = b;
  return v;
}

ConfigValue ConfigValue::list(std::vector<ConfigValue> items) {
  ConfigValue v;
  v.kind = Kind::list;
  v.items = std::move(items);
  return v;
}

double ConfigValue::as_double() const {
  if (kind != Kind::number) throw ConfigError("expected a number, got " + render());
  double out = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) throw ConfigError("bad number '" + text + "'");
  if (!std::isfinite(out)) throw ConfigError("number must be finite: '" + text + "'");
  return out;
}

std::uint64_t ConfigValue::as_u64() const {
  if (kind != Kind::number) throw ConfigError("expected an integer, got " + render());
  std::uint64_t out = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError("expected a non-negative integer, got '" + text + "'");
  return out;
}

std::size_t ConfigValue::as_count() const { return static_cast<std::size_t>(as_u64()); }

const std::string& ConfigValue::as_string() const {
  if (kind != Kind::string) throw ConfigError("expected a string, got " + render());
  return text;
}

bool ConfigValue::as_bool() const {
  if (kind != Kind::boolean) throw ConfigError("expected true/false, got " + render());
  return flag;
}

std::vector<double> ConfigValue::as_doubles() const {
  if (kind != Kind::list) return {as_double()};
  std::vector<double> out;
  for (const auto& it : items) out.push_back(it.as_double());
  return out;
}

std::vector<std::size_t> ConfigValue::as_counts() const {
  if (kind != Kind::list) return {as_count()};
  std::vector<std::size_t> out;
  for (const auto& it : items) out.push_back(it.as_count());
  return out;
}

std::vector<std::string> ConfigValue::as_strings() const {
  if (kind != Kind::list) return {as_string()};
  std::vector<std::string> out;
  for (const auto& it : items) out.push_back(it.as_string());
  return out;
}

Matrix ConfigValue::as_matrix() const {
  if (kind == Kind::number) return Matrix{{as_double()}};
  if (kind != Kind::list || items.empty()) throw ConfigError("expected a matrix, got " + render());
  if (items.front().kind != Kind::list) return Matrix::row(as_doubles());
  const std::size_t rows = items.size();
  const std::size_t cols = items.front().items.size();
  if (cols == 0) throw ConfigError("matrix rows must be non-empty");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = items[r].as_doubles();
    if (row.size() != cols) throw ConfigError("matrix rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return m;
}

std::string ConfigValue::render() const {
  switch (kind) {
    case Kind::number: return text;
    case Kind::boolean: return flag ? "true" : "false";
    case Kind::string: {
      std::string out = "\"";
      for (char ch : text) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch;
      }
      return out + "\"";
    }
    case Kind::list: {
      std::string out = "[";
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i].render();
      }
      return out + "]";
    }
  }
  return {};
}

namespace {

class ValueParser {
 public:
  explicit ValueParser(const std::string& s) : s_(s) {}

  ConfigValue parse_all() {
    ConfigValue v = parse();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("cannot parse value '" + s_ + "': " + what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  ConfigValue parse() {
    skip_ws();
    if (pos_ >= s_.size()) fail("empty value");
    const char ch = s_[pos_];
    if (ch == '[') return parse_list();
    if (ch == '"') return parse_string();
    return parse_scalar();
  }

  ConfigValue parse_list() {
    ++pos_;
    std::vector<ConfigValue> items;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return ConfigValue::list({});
    }
    while (true) {
      items.push_back(parse());
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated list");
      if (s_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return ConfigValue::list(std::move(items));
      }
      fail("expected ',' or ']'");
    }
  }

  ConfigValue parse_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
      out += s_[pos_++];
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return ConfigValue::string(std::move(out));
  }

  ConfigValue parse_scalar() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    const std::string word = s_.substr(start, pos_ - start);
    if (word == "true") return ConfigValue::boolean(true);
    if (word == "false") return ConfigValue::boolean(false);
    double d = 0.0;
    auto res = std::from_chars(word.data(), word.data() + word.size(), d);
    if (res.ec == std::errc() && res.ptr == word.data() + word.size()) return ConfigValue::number(word);
    // Bare words are strings, so `--system.kind=lorenz` works unquoted.
    return ConfigValue::string(word);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

ConfigValue num(double x) { return ConfigValue::number(format_double(x)); }
ConfigValue count(std::uint64_t x) { return ConfigValue::number(std::to_string(x)); }
ConfigValue str(std::string s) { return ConfigValue::string(std::move(s)); }

ConfigValue nums(const Vector& v) {
  std::vector<ConfigValue> items;
  for (double x : v) items.push_back(num(x));
  return ConfigValue::list(std::move(items));
}

ConfigValue counts(const std::vector<std::size_t>& v) {
  std::vector<ConfigValue> items;
  for (auto x : v) items.push_back(count(x));
  return ConfigValue::list(std::move(items));
}

ConfigValue matrix(const Matrix& m) {
  std::vector<ConfigValue> rows;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row_span(r);
    rows.push_back(nums(Vector(row.begin(), row.end())));
  }
  return ConfigValue::list(std::move(rows));
}

const char* const kCoordNames[] = {"x", "y", "z"};

std::string init_kind_name(InitPolicy::Kind k) {
  switch (k) {
    case InitPolicy::Kind::fixed: return "fixed";
    case InitPolicy::Kind::ball_grid: return "ball_grid";
    case InitPolicy::Kind::stationary: return "stationary";
  }
  return "?";
}

// Typed accessors over one section with defaults.
class Section {
 public:
  Section(const ConfigDocument& doc, std::string name) : doc_(doc), name_(std::move(name)) {}

  const ConfigValue* get(const std::string& key) const { return doc_.find(name_, key); }
  template <typename F>
  auto read(const std::string& key, F&& convert) const -> decltype(convert(std::declval<const ConfigValue&>())) {
    const ConfigValue* v = get(key);
    try {
      return convert(*v);
    } catch (const ConfigError& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }
  double num(const std::string& key, double def) const {
    return get(key) ? read(key, [](const ConfigValue& v) { return v.as_double(); }) : def;
  }
  std::size_t count(const std::string& key, std::size_t def) const {
    return get(key) ? read(key, [](const ConfigValue& v) { return v.as_count(); }) : def;
  }
  std::string str(const std::string& key, const std::string& def) const {
    return get(key) ? read(key, [](const ConfigValue& v) { return v.as_string(); }) : def;
  }
  bool flag(const std::string& key, bool def) const {
    return get(key) ? read(key, [](const ConfigValue& v) { return v.as_bool(); }) : def;
  }
  Vector nums(const std::string& key, const Vector& def) const {
    return get(key) ? read(key, [](const ConfigValue& v) { return v.as_doubles(); }) : def;
  }
  std::optional<Matrix> matrix(const std::string& key) const {
    if (!get(key)) return std::nullopt;
    return read(key, [](const ConfigValue& v) { return v.as_matrix(); });
  }

 private:
  const ConfigDocument& doc_;
  std::string name_;
};

InitPolicy read_init(const Section& s, const InitPolicy& def) {
  const std::string kind = s.str("init", init_kind_name(def.kind));
  if (kind == "fixed") return InitPolicy::fixed(s.nums("x0", def.x0));
  if (kind == "ball_grid") return InitPolicy::ball_grid(s.num("radius", def.radius), s.count("points", def.points));
  if (kind == "stationary") return InitPolicy::stationary();
  throw ConfigError("system.init: unknown policy '" + kind + "'");
}

void write_init(ConfigDocument& doc, const InitPolicy& p) {
  doc.set("system", "init", str(init_kind_name(p.kind)));
  if (p.kind == InitPolicy::Kind::fixed) doc.set("system", "x0", nums(p.x0));
  if (p.kind == InitPolicy::Kind::ball_grid) {
    doc.set("system", "radius", num(p.radius));
    doc.set("system", "points", count(p.points));
  }
}

std::vector<std::size_t> read_grid(const ConfigValue& v) {
  if (v.kind == ConfigValue::Kind::string) {
    // log:START:STOP:POINTS
    std::vector<std::string> parts;
    std::stringstream ss(v.text);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() != 4 || parts[0] != "log") throw ConfigError("t_grid string must be log:START:STOP:POINTS");
    auto to_count = [](const std::string& t) { return parse_config_value(t).as_count(); };
    return log_grid(to_count(parts[1]), to_count(parts[2]), to_count(parts[3]));
  }
  return v.as_counts();
}

}  // namespace

ConfigValue parse_config_value(const std::string& text) { return ValueParser(text).parse_all(); }

ConfigDocument ConfigDocument::parse(const std::string& text) {
  ConfigDocument doc;
  std::string section = "experiment";
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    try {
      doc.set(section, key, parse_config_value(trim(line.substr(eq + 1))));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return doc;
}

void ConfigDocument::set(const std::string& section, const std::string& key, ConfigValue value) {
  sections_[section][key] = std::move(value);
}

void ConfigDocument::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override must look like section.key=value, got '" + assignment + "'");
  const std::string section = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  if (section.empty() || key.empty()) throw ConfigError("override has an empty section or key: '" + assignment + "'");
  set(section, key, parse_config_value(assignment.substr(eq + 1)));
}

bool ConfigDocument::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const ConfigValue* ConfigDocument::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

std::string ConfigDocument::render() const {
  std::string out;
  // "experiment" first so top-level keys read naturally.
  auto emit = [&](const std::string& name, const std::map<std::string, ConfigValue>& keys) {
    out += "[" + name + "]\n";
    for (const auto& [k, v] : keys) out += k + " = " + v.render() + "\n";
    out += "\n";
  };
  if (auto it = sections_.find("experiment"); it != sections_.end()) emit(it->first, it->second);
  for (const auto& [name, keys] : sections_)
    if (name != "experiment") emit(name, keys);
  return out;
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  LdsSpec lds;
  lds.A = Matrix{{0.9}};
  lds.C = Matrix{{1.0}};
  lds.noise = NoiseSpec::gaussian({0.1}, {0.1});
  lds.init = InitPolicy::ball_grid(1.0, 8);
  lds.symmetric = true;
  c.system = lds;
  c.predictor = PredictorConfig::spectral(100, 15);
  c.oracle = OracleKind::kalman;
  c.harness.t_grid = log_grid(10, 2000, 16);
  c.harness.window = 16;
  c.harness.n_traj = 200;
  c.baselines = {PredictorConfig::ar(1), PredictorConfig::ar(5), PredictorConfig::of(PredictorKind::last_value)};
  return c;
}

PredictorConfig parse_baseline(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  PredictorConfig c = PredictorConfig::of(parse_predictor_kind(kind));
  if (colon != std::string::npos) {
    const ConfigValue arg = parse_config_value(text.substr(colon + 1));
    if (c.kind == PredictorKind::ar) c.ar_order = arg.as_count();
    else if (c.kind == PredictorKind::spectral) c.m = arg.as_count();
    else throw ConfigError("baseline '" + text + "' takes no argument");
  }
  return c;
}

std::string baseline_name(const PredictorConfig& c) {
  if (c.kind == PredictorKind::ar) return "ar:" + std::to_string(c.ar_order);
  if (c.kind == PredictorKind::spectral) return "spectral:" + std::to_string(c.m);
  return to_string(c.kind);
}

ExperimentConfig build_config(const ConfigDocument& doc) {
  ExperimentConfig c = ExperimentConfig::defaults();
  const Section exp(doc, "experiment"), sys(doc, "system"), pred(doc, "predictor"), orc(doc, "oracle"),
      har(doc, "harness"), mst(doc, "mstar"), agn(doc, "agnostic"), bv(doc, "biasvar");

  if (exp.get("seed")) c.seed = exp.read("seed", [](const ConfigValue& v) { return v.as_u64(); });
  c.output_dir = exp.str("output", c.output_dir);

  const std::string kind = sys.str("kind", "lds");
  if (kind == "lds" || kind == "closed_loop") {
    const LdsSpec def = std::get<LdsSpec>(ExperimentConfig::defaults().system);
    LdsSpec lds;
    lds.A = sys.matrix("A").value_or(def.A);
    if (auto cm = sys.matrix("C")) {
      lds.C = std::move(*cm);
    } else {
      // Default observation: the first state coordinate.
      lds.C = Matrix(1, lds.A.rows(), 0.0);
      lds.C(0, 0) = 1.0;
    }
    if (kind == "closed_loop") {
      lds.B = sys.matrix("B");
      lds.K = sys.matrix("K");
      if (!lds.B || !lds.K) throw ConfigError("system.kind = closed_loop needs B and K");
    }
    const std::string noise = sys.str("noise", "gaussian");
    if (noise == "gaussian") lds.noise = NoiseSpec::gaussian(sys.nums("process_stdev", {0.1}), sys.nums("obs_stdev", {0.1}));
    else if (noise == "none") lds.noise = NoiseSpec::none();
    else throw ConfigError("system.noise: expected gaussian or none, got '" + noise + "'");
    lds.symmetric = sys.flag("symmetric", kind == "lds");
    lds.init = read_init(sys, def.init);
    c.system = std::move(lds);
  } else if (kind == "lorenz") {
    LorenzSpec lz;
    lz.sigma = sys.num("sigma", lz.sigma);
    lz.rho = sys.num("rho", lz.rho);
    lz.beta = sys.num("beta", lz.beta);
    lz.dt = sys.num("dt", lz.dt);
    lz.obs_noise = sys.num("obs_noise", lz.obs_noise);
    if (sys.get("obs_coords")) {
      lz.obs_coords.clear();
      for (const auto& name : sys.read("obs_coords", [](const ConfigValue& v) { return v.as_strings(); })) {
        auto it = std::find(std::begin(kCoordNames), std::end(kCoordNames), name);
        if (it == std::end(kCoordNames)) throw ConfigError("system.obs_coords: unknown coordinate '" + name + "'");
        lz.obs_coords.push_back(static_cast<std::size_t>(it - std::begin(kCoordNames)));
      }
    }
    lz.init = read_init(sys, lz.init);
    c.system = std::move(lz);
  } else {
    throw ConfigError("system.kind: expected lds, closed_loop or lorenz, got '" + kind + "'");
  }
  validate(c.system);

  c.predictor.kind = parse_predictor_kind(pred.str("kind", to_string(c.predictor.kind)));
  c.predictor.window = pred.count("window", c.predictor.window);
  c.predictor.m = pred.count("m", c.predictor.m);
  c.predictor.sign_augmented = pred.flag("sign_augmented", c.predictor.sign_augmented);
  c.predictor.readout.reg_scale = pred.num("reg", c.predictor.readout.reg_scale);
  c.predictor.readout.refit_period = pred.count("refit_period", c.predictor.readout.refit_period);
  c.predictor.ar_order = pred.count("ar_order", c.predictor.ar_order);
  c.predictor.kernel_truncation = pred.count("kernel_truncation", c.predictor.kernel_truncation);
  if (c.predictor.readout.reg_scale < 0.0) throw InvariantViolation("predictor.reg must be >= 0");
  if (c.predictor.readout.refit_period == 0) throw InvariantViolation("predictor.refit_period must be >= 1");

  c.oracle = parse_oracle_kind(orc.str("kind", to_string(c.oracle)));

  if (har.get("t_grid")) c.harness.t_grid = har.read("t_grid", [](const ConfigValue& v) { return read_grid(v); });
  c.harness.window = har.count("window", c.harness.window);
  c.harness.n_traj = har.count("n_traj", c.harness.n_traj);
  c.simulate_horizon = har.count("horizon", c.simulate_horizon);
  c.record_latent = har.flag("record_latent", c.record_latent);
  c.epsilons = har.nums("epsilon", c.epsilons);
  c.epsilon_relative = har.flag("epsilon_relative", c.epsilon_relative);
  c.harness.master_seed = c.seed;
  c.harness.validate();
  for (double e : c.epsilons)
    if (!(e > 0.0)) throw InvariantViolation("harness.epsilon values must be > 0");

  if (mst.get("m_values")) c.m_values = mst.read("m_values", [](const ConfigValue& v) { return v.as_counts(); });
  if (agn.get("baselines")) {
    c.baselines.clear();
    for (const auto& b : agn.read("baselines", [](const ConfigValue& v) { return v.as_strings(); }))
      c.baselines.push_back(parse_baseline(b));
  }
  c.reference_multiplier = bv.count("reference_multiplier", c.reference_multiplier);
  return c;
}

ConfigDocument to_document(const ExperimentConfig& c) {
  ConfigDocument doc;
  doc.set("experiment", "seed", count(c.seed));
  doc.set("experiment", "output", str(c.output_dir));

  if (const auto* lds = std::get_if<LdsSpec>(&c.system)) {
    doc.set("system", "kind", str(lds->has_feedback() ? "closed_loop" : "lds"));
    doc.set("system", "A", matrix(lds->A));
    doc.set("system", "C", matrix(lds->C));
    if (lds->has_feedback()) {
      doc.set("system", "B", matrix(*lds->B));
      doc.set("system", "K", matrix(*lds->K));
    }
    const bool gaussian = lds->noise.kind == NoiseKind::gaussian;
    doc.set("system", "noise", str(gaussian ? "gaussian" : "none"));
    if (gaussian) {
      doc.set("system", "process_stdev", nums(lds->noise.stdev_process));
      doc.set("system", "obs_stdev", nums(lds->noise.stdev_obs));
    }
    doc.set("system", "symmetric", ConfigValue::boolean(lds->symmetric));
    write_init(doc, lds->init);
  } else {
    const auto& lz = std::get<LorenzSpec>(c.system);
    doc.set("system", "kind", str("lorenz"));
    doc.set("system", "sigma", num(lz.sigma));
    doc.set("system", "rho", num(lz.rho));
    doc.set("system", "beta", num(lz.beta));
    doc.set("system", "dt", num(lz.dt));
    doc.set("system", "obs_noise", num(lz.obs_noise));
    std::vector<ConfigValue> coords;
    for (auto i : lz.obs_coords) coords.push_back(str(kCoordNames[i]));
    doc.set("system", "obs_coords", ConfigValue::list(std::move(coords)));
    write_init(doc, lz.init);
  }

  doc.set("predictor", "kind", str(to_string(c.predictor.kind)));
  doc.set("predictor", "window", count(c.predictor.window));
  doc.set("predictor", "m", count(c.predictor.m));
  doc.set("predictor", "sign_augmented", ConfigValue::boolean(c.predictor.sign_augmented));
  doc.set("predictor", "reg", num(c.predictor.readout.reg_scale));
  doc.set("predictor", "refit_period", count(c.predictor.readout.refit_period));
  doc.set("predictor", "ar_order", count(c.predictor.ar_order));
  doc.set("predictor", "kernel_truncation", count(c.predictor.kernel_truncation));

  doc.set("oracle", "kind", str(to_string(c.oracle)));

  doc.set("harness", "t_grid", counts(c.harness.t_grid));
  doc.set("harness", "window", count(c.harness.window));
  doc.set("harness", "n_traj", count(c.harness.n_traj));
  doc.set("harness", "horizon", count(c.simulate_horizon));
  doc.set("harness", "record_latent", ConfigValue::boolean(c.record_latent));
  doc.set("harness", "epsilon", nums(c.epsilons));
  doc.set("harness", "epsilon_relative", ConfigValue::boolean(c.epsilon_relative));

  doc.set("mstar", "m_values", counts(c.m_values));
  std::vector<ConfigValue> bl;
  for (const auto& b : c.baselines) bl.push_back(str(baseline_name(b)));
  doc.set("agnostic", "baselines", ConfigValue::list(std::move(bl)));
  doc.set("biasvar", "reference_multiplier", count(c.reference_multiplier));
  return doc;
}

std::string render_config(const ExperimentConfig& config) { return to_document(config).render(); }

std::uint64_t config_digest(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : render_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace dynolearn
