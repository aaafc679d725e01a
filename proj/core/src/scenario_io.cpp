#include "platoon/scenario_io.hpp"

#include "platoon/format.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

namespace platoon {

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

using Section = std::map<std::string, std::pair<std::string, int>>;  // key -> (value, line)

struct Document {
  std::map<std::string, Section> sections;
  std::string origin;

  [[noreturn]] void fail(int line, const std::string& message) const {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + message);
  }
};

Document tokenize(std::string_view text, const std::string& origin) {
  Document doc;
  doc.origin = origin;
  std::string current;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                           : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const std::size_t hash = line.find_first_of("#;"); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') doc.fail(line_no, "malformed section header");
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (current.empty()) doc.fail(line_no, "empty section name");
      doc.sections.try_emplace(current);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) doc.fail(line_no, "expected key = value");
    if (current.empty()) doc.fail(line_no, "key outside any section");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) doc.fail(line_no, "empty key");
    auto [it, inserted] = doc.sections[current].try_emplace(key, value, line_no);
    if (!inserted) doc.fail(line_no, "duplicate key '" + key + "' in [" + current + "]");
  }
  return doc;
}

class SectionReader {
 public:
  SectionReader(const Document& doc, const std::string& name)
      : doc_(doc), name_(name) {
    if (auto it = doc.sections.find(name); it != doc.sections.end()) {
      section_ = &it->second;
    }
  }

  bool has(const std::string& key) const {
    if (section_ == nullptr) return false;
    return section_->count(key) != 0;
  }

  std::string raw(const std::string& key) const {
    used_.insert(key);
    return section_->at(key).first;
  }

  double number(const std::string& key) const {
    const std::string v = raw(key);
    return parse_number(v, key);
  }

  double number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  int integer(const std::string& key) const {
    const std::string v = raw(key);
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
      fail(key, "expected an integer, got '" + v + "'");
    }
    return out;
  }

  int integer_or(const std::string& key, int fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  bool boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = raw(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(key, "expected a boolean, got '" + v + "'");
  }

  std::vector<double> number_list(const std::string& key) const {
    const std::string v = raw(key);
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto entry = trim(item);
      if (entry.empty()) fail(key, "empty list entry");
      out.push_back(parse_number(std::string(entry), key));
    }
    if (out.empty()) fail(key, "empty list");
    return out;
  }

  std::vector<std::pair<double, double>> point_list(const std::string& key) const {
    const std::string v = raw(key);
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string entry(trim(item));
      const std::size_t colon = entry.find(':');
      if (colon == std::string::npos) fail(key, "expected t:value pairs");
      out.emplace_back(parse_number(std::string(trim(std::string_view(entry).substr(0, colon))), key),
                       parse_number(std::string(trim(std::string_view(entry).substr(colon + 1))), key));
    }
    if (out.empty()) fail(key, "empty point list");
    return out;
  }

  // Every present key must have been consumed by the schema.
  void reject_unused() const {
    if (section_ == nullptr) return;
    for (const auto& [key, value] : *section_) {
      if (!used_.count(key)) {
        doc_.fail(value.second, "unknown key '" + key + "' in [" + name_ + "]");
      }
    }
  }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    const int line = section_ != nullptr && section_->count(key) ? section_->at(key).second : 0;
    doc_.fail(line, "[" + name_ + "] " + key + ": " + message);
  }

  double parse_number(const std::string& v, const std::string& key) const {
    if (v == "inf" || v == "+inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    if (v == "-inf" || v == "-infinity") return -std::numeric_limits<double>::infinity();
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
      fail(key, "expected a number, got '" + v + "'");
    }
    return out;
  }

  const Document& doc_;
  std::string name_;
  const Section* section_ = nullptr;
  mutable std::set<std::string> used_;
};

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& origin) {
  const Document doc = tokenize(text, origin);

  static const std::set<std::string> kSections = {"platoon", "model",  "controller",
                                                  "leader",  "sim",    "certify"};
  for (const auto& [name, section] : doc.sections) {
    if (!kSections.count(name)) {
      throw ConfigError(origin + ": unknown section [" + name + "]");
    }
  }

  Scenario sc;

  SectionReader platoon(doc, "platoon");
  if (!platoon.has("n")) throw ConfigError(origin + ": [platoon] n is required");
  sc.n = platoon.integer("n");
  sc.dim = platoon.integer_or("dim", 1);
  if (platoon.has("spacing") && platoon.has("spacings")) {
    throw ConfigError(origin + ": give either [platoon] spacing or spacings, not both");
  }
  if (platoon.has("spacings")) {
    sc.spacings = platoon.number_list("spacings");
  } else if (platoon.has("spacing")) {
    sc.spacings.assign(static_cast<std::size_t>(std::max(sc.n, 0)) + 1, platoon.number("spacing"));
  } else {
    throw ConfigError(origin + ": [platoon] needs spacing or spacings");
  }
  platoon.reject_unused();

  SectionReader model(doc, "model");
  const std::string family = model.has("family") ? model.raw("family") : "linear_drag";
  if (family == "linear_drag") {
    sc.model = LinearDrag{model.number_or("c1", 0.0)};
  } else if (family == "signed_quadratic_drag") {
    sc.model = SignedQuadraticDrag{model.number_or("c1", 0.0), model.number_or("c2", 0.0)};
  } else {
    throw ConfigError(origin + ": [model] unknown family '" + family + "'");
  }
  model.reject_unused();

  SectionReader controller(doc, "controller");
  ControlVariant variant = ControlVariant::Feedforward;
  if (controller.has("variant")) {
    const std::string v = controller.raw("variant");
    if (v == "feedforward") {
      variant = ControlVariant::Feedforward;
    } else if (v == "local-only" || v == "local_only") {
      variant = ControlVariant::LocalOnly;
    } else {
      throw ConfigError(origin + ": [controller] unknown variant '" + v + "'");
    }
  }
  if (!controller.has("apf_amplitude") || !controller.has("apf_delta_sigma")) {
    throw ConfigError(origin + ": [controller] apf_amplitude and apf_delta_sigma are required");
  }
  const double sigma_value = controller.number_or("sigma", 1.0);
  std::vector<double> betas;
  if (controller.has("beta") && controller.has("betas")) {
    throw ConfigError(origin + ": give either [controller] beta or betas, not both");
  }
  if (controller.has("betas")) {
    betas = controller.number_list("betas");
  } else if (controller.has("beta")) {
    betas.assign(static_cast<std::size_t>(std::max(sc.n, 0)), controller.number("beta"));
  } else {
    throw ConfigError(origin + ": [controller] needs beta or betas");
  }
  if (betas.size() != static_cast<std::size_t>(std::max(sc.n, 0))) {
    throw ConfigError(origin + ": [controller] betas must list one gain per follower");
  }
  double apf_amplitude = controller.number("apf_amplitude");
  double apf_delta = controller.number("apf_delta_sigma");
  controller.reject_unused();
  try {
    const ApfParams apf(apf_amplitude, apf_delta);
    const SigmaParam sigma(sigma_value);
    sc.controllers.clear();
    sc.controllers.reserve(betas.size());
    for (double beta : betas) {
      sc.controllers.emplace_back(beta, apf, sigma, variant);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin + ": [controller] " + e.what());
  }

  SectionReader leader(doc, "leader");
  const std::string profile = leader.has("profile") ? leader.raw("profile") : "constant";
  if (profile == "constant") {
    sc.profile = ConstantInput{leader.number_or("u0", 0.0)};
  } else if (profile == "piecewise_linear") {
    if (!leader.has("points")) {
      throw ConfigError(origin + ": [leader] piecewise_linear needs points");
    }
    sc.profile = PiecewiseLinearInput{leader.point_list("points")};
  } else if (profile == "sinusoid") {
    sc.profile = SinusoidInput{leader.number_or("amplitude", 0.0),
                               leader.number_or("frequency", 0.0), leader.number_or("phase", 0.0)};
  } else if (profile == "stop_and_go") {
    sc.profile = StopAndGo{leader.number_or("accel", 0.0), leader.number_or("accel_duration", 0.0),
                           leader.number_or("cruise_duration", 0.0), leader.number_or("decel", 0.0),
                           leader.number_or("decel_duration", 0.0)};
  } else {
    throw ConfigError(origin + ": [leader] unknown profile '" + profile + "'");
  }
  leader.reject_unused();

  SectionReader sim(doc, "sim");
  sc.T = sim.number_or("T", 60.0);
  sc.dt = sim.number_or("dt", 0.01);
  sc.collision_epsilon = sim.number_or("collision_epsilon", 0.01);
  sc.stride = sim.integer_or("stride", 1);
  sc.guard.control_ceiling = sim.number_or("control_ceiling",
                                           std::numeric_limits<double>::infinity());
  sc.guard.max_halvings = sim.integer_or("max_halvings", 20);
  sim.reject_unused();

  SectionReader certify(doc, "certify");
  sc.certify.enabled = certify.boolean_or("enabled", true);
  sc.certify.tol_inv = certify.number_or("tol_inv", 1e-6);
  sc.certify.tol_match = certify.number_or("tol_match", 1e-3);
  certify.reject_unused();

  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open scenario file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path.string());
}

std::string serialize_scenario(const Scenario& sc) {
  std::ostringstream out;
  const auto list = [](const auto& values, auto&& format) {
    std::string joined;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i > 0) joined += ", ";
      joined += format(values[i]);
    }
    return joined;
  };

  out << "[platoon]\n";
  out << "n = " << sc.n << "\n";
  out << "dim = " << sc.dim << "\n";
  out << "spacings = " << list(sc.spacings, [](double x) { return format_double(x); }) << "\n";

  out << "\n[model]\n";
  if (const auto* lin = std::get_if<LinearDrag>(&sc.model)) {
    out << "family = linear_drag\n";
    out << "c1 = " << format_double(lin->c1) << "\n";
  } else if (const auto* quad = std::get_if<SignedQuadraticDrag>(&sc.model)) {
    out << "family = signed_quadratic_drag\n";
    out << "c1 = " << format_double(quad->c1) << "\n";
    out << "c2 = " << format_double(quad->c2) << "\n";
  } else {
    throw ConfigError("serialize_scenario: custom models have no file form");
  }

  out << "\n[controller]\n";
  const bool feedforward = sc.feedforward();
  out << "variant = " << (feedforward ? "feedforward" : "local-only") << "\n";
  bool uniform_beta = true;
  for (const auto& cfg : sc.controllers) {
    uniform_beta = uniform_beta && cfg.beta() == sc.controllers.front().beta();
  }
  if (uniform_beta && !sc.controllers.empty()) {
    out << "beta = " << format_double(sc.controllers.front().beta()) << "\n";
  } else {
    std::vector<double> betas;
    for (const auto& cfg : sc.controllers) betas.push_back(cfg.beta());
    out << "betas = " << list(betas, [](double x) { return format_double(x); }) << "\n";
  }
  if (!sc.controllers.empty()) {
    out << "apf_amplitude = " << format_double(sc.controllers.front().apf().amplitude()) << "\n";
    out << "apf_delta_sigma = " << format_double(sc.controllers.front().apf().delta_sigma())
        << "\n";
    out << "sigma = " << format_double(sc.controllers.front().sigma().sigma()) << "\n";
  }

  out << "\n[leader]\n";
  std::visit(
      [&out, &list](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ConstantInput>) {
          out << "profile = constant\n";
          out << "u0 = " << format_double(p.u0) << "\n";
        } else if constexpr (std::is_same_v<T, PiecewiseLinearInput>) {
          out << "profile = piecewise_linear\n";
          out << "points = "
              << list(p.points,
                      [](const std::pair<double, double>& pt) {
                        return format_double(pt.first) + ":" + format_double(pt.second);
                      })
              << "\n";
        } else if constexpr (std::is_same_v<T, SinusoidInput>) {
          out << "profile = sinusoid\n";
          out << "amplitude = " << format_double(p.amplitude) << "\n";
          out << "frequency = " << format_double(p.frequency_hz) << "\n";
          out << "phase = " << format_double(p.phase) << "\n";
        } else {
          out << "profile = stop_and_go\n";
          out << "accel = " << format_double(p.accel) << "\n";
          out << "accel_duration = " << format_double(p.accel_duration) << "\n";
          out << "cruise_duration = " << format_double(p.cruise_duration) << "\n";
          out << "decel = " << format_double(p.decel) << "\n";
          out << "decel_duration = " << format_double(p.decel_duration) << "\n";
        }
      },
      sc.profile);

  out << "\n[sim]\n";
  out << "T = " << format_double(sc.T) << "\n";
  out << "dt = " << format_double(sc.dt) << "\n";
  out << "collision_epsilon = " << format_double(sc.collision_epsilon) << "\n";
  out << "stride = " << sc.stride << "\n";
  out << "control_ceiling = " << format_double(sc.guard.control_ceiling) << "\n";
  out << "max_halvings = " << sc.guard.max_halvings << "\n";

  out << "\n[certify]\n";
  out << "enabled = " << (sc.certify.enabled ? "true" : "false") << "\n";
  out << "tol_inv = " << format_double(sc.certify.tol_inv) << "\n";
  out << "tol_match = " << format_double(sc.certify.tol_match) << "\n";

  return out.str();
}

}  // namespace platoon
