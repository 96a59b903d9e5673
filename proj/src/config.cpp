#include "modalray/config.hpp"

#include "modalray/errors.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>

namespace modalray {

using nlohmann::json;

namespace {

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(display(path_) + " must be an object");
  }

  template <class F>
  void field(const std::string& key, F&& fn) {
    seen_.insert(key);
    if (j_.contains(key)) fn(j_.at(key), child(key));
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ValidationError("unknown key " + child(item.key()));
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  static std::string display(const std::string& p) { return p.empty() ? "configuration root" : p; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(path + " must be finite");
  return v;
}

// Numbers, or strings like "pi", "-pi", "5pi/12", "0.5*pi".
double angle(const json& j, const std::string& path) {
  if (j.is_number()) return number(j, path);
  if (!j.is_string()) throw ValidationError(path + " must be a number or a multiple of pi");
  static const std::regex re(R"(^\s*(-)?\s*([0-9]*\.?[0-9]*)\s*\*?\s*pi\s*(/\s*([0-9]+\.?[0-9]*))?\s*$)");
  std::smatch m;
  const std::string s = j.get<std::string>();
  if (!std::regex_match(s, m, re)) throw ValidationError(path + ": cannot read \"" + s + "\" as an angle");
  double v = std::numbers::pi;
  if (m[2].length() > 0) v *= std::stod(m[2]);
  if (m[4].length() > 0) v /= std::stod(m[4]);
  if (m[1].length() > 0) v = -v;
  return v;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ValidationError(path + " must be an integer");
  return j.get<int>();
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ValidationError(path + " must be true or false");
  return j.get<bool>();
}

std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ValidationError(path + " must be a string");
  return j.get<std::string>();
}

std::vector<double> number_list(const json& j, const std::string& path) {
  if (j.is_number()) return {number(j, path)};
  if (!j.is_array() || j.empty()) throw ValidationError(path + " must be a number or a non-empty list");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Vec2 vec2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) throw ValidationError(path + " must be a list of two numbers");
  return Vec2(number(j[0], path + "[0]"), number(j[1], path + "[1]"));
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ValidationError(path + " " + what);
}

}  // namespace

LambdaTilde LambdaTildeConfig::function() const {
  if (is_zero()) return {};
  const LambdaTildeConfig c = *this;
  return [c](double p_tau, const Vec2& r) { return c.constant + c.grad.dot(r) + c.d_p_tau * p_tau; };
}

MediumModel RunConfig::medium_model(double alpha) const {
  return MediumModel(medium.c, medium.c_bot, medium.h0, medium.grad_h, alpha);
}

HamiltonianModel RunConfig::hamiltonian_model(double alpha) const {
  return HamiltonianModel(medium_model(alpha), mode.l, mode.lambda_tilde.function(), mode.derivatives);
}

RingSource RunConfig::source_model(const HamiltonianModel& model) const {
  RingSource::Params p;
  p.freq0 = source.freq0;
  p.dfreq = source.dfreq;
  p.radius = source.radius;
  p.amplitude = source.amplitude;
  p.shell = source.shell_mode;
  p.derivatives = source.derivatives;
  return RingSource(model, p);
}

IntegrationSettings RunConfig::integration_settings() const {
  IntegrationSettings s;
  s.tau_end = run.tau_end;
  s.step = run.step;
  s.checkpoints = run.checkpoints;
  s.cutoff_ratio = run.cutoff_ratio;
  return s;
}

RunConfig config_from_json(const json& root) {
  RunConfig cfg;
  ObjectReader top(root, "");

  top.field("medium", [&](const json& j, const std::string& path) {
    ObjectReader r(j, path);
    r.field("c", [&](const json& v, const std::string& p) { cfg.medium.c = number(v, p); });
    r.field("c_bot", [&](const json& v, const std::string& p) { cfg.medium.c_bot = number(v, p); });
    r.field("h0", [&](const json& v, const std::string& p) { cfg.medium.h0 = number(v, p); });
    r.field("grad_h", [&](const json& v, const std::string& p) { cfg.medium.grad_h = vec2(v, p); });
    r.field("alpha", [&](const json& v, const std::string& p) { cfg.medium.alpha = number_list(v, p); });
    r.finish();
  });
  top.field("mode", [&](const json& j, const std::string& path) {
    ObjectReader r(j, path);
    r.field("l", [&](const json& v, const std::string& p) { cfg.mode.l = integer(v, p); });
    r.field("lambda_tilde", [&](const json& v, const std::string& p) {
      if (v.is_number()) {
        cfg.mode.lambda_tilde.constant = number(v, p);
        return;
      }
      ObjectReader lt(v, p);
      lt.field("constant", [&](const json& x, const std::string& q) { cfg.mode.lambda_tilde.constant = number(x, q); });
      lt.field("grad", [&](const json& x, const std::string& q) { cfg.mode.lambda_tilde.grad = vec2(x, q); });
      lt.field("d_p_tau", [&](const json& x, const std::string& q) { cfg.mode.lambda_tilde.d_p_tau = number(x, q); });
      lt.finish();
    });
    r.field("derivatives", [&](const json& v, const std::string& p) {
      const std::string s = string(v, p);
      if (s == "implicit")
        cfg.mode.derivatives = DerivativeSource::implicit;
      else if (s == "finite_difference")
        cfg.mode.derivatives = DerivativeSource::finite_difference;
      else
        throw ValidationError(p + " must be \"implicit\" or \"finite_difference\"");
    });
    r.finish();
  });
  top.field("source", [&](const json& j, const std::string& path) {
    ObjectReader r(j, path);
    r.field("mu1", [&](const json& v, const std::string& p) { cfg.source.mu1 = number_list(v, p); });
    r.field("mu2", [&](const json& v, const std::string& p) {
      ObjectReader g(v, p);
      g.field("count", [&](const json& x, const std::string& q) { cfg.source.mu2.count = integer(x, q); });
      g.field("min", [&](const json& x, const std::string& q) { cfg.source.mu2.min = angle(x, q); });
      g.field("max", [&](const json& x, const std::string& q) { cfg.source.mu2.max = angle(x, q); });
      g.field("endpoint", [&](const json& x, const std::string& q) { cfg.source.mu2.endpoint = boolean(x, q); });
      g.finish();
    });
    r.field("freq0", [&](const json& v, const std::string& p) { cfg.source.freq0 = number(v, p); });
    r.field("dfreq", [&](const json& v, const std::string& p) { cfg.source.dfreq = number(v, p); });
    r.field("radius", [&](const json& v, const std::string& p) { cfg.source.radius = number(v, p); });
    r.field("amplitude", [&](const json& v, const std::string& p) { cfg.source.amplitude = number(v, p); });
    r.field("shell_mode", [&](const json& v, const std::string& p) {
      const std::string s = string(v, p);
      if (s != "strict" && s != "literal") throw ValidationError(p + " must be \"strict\" or \"literal\"");
      cfg.source.shell_mode = parse_shell_mode(s);
    });
    r.field("derivatives", [&](const json& v, const std::string& p) {
      const std::string s = string(v, p);
      if (s == "finite_difference")
        cfg.source.derivatives = SourceDerivatives::finite_difference;
      else if (s == "analytic")
        cfg.source.derivatives = SourceDerivatives::analytic;
      else
        throw ValidationError(p + " must be \"finite_difference\" or \"analytic\"");
    });
    r.finish();
  });
  top.field("run", [&](const json& j, const std::string& path) {
    ObjectReader r(j, path);
    r.field("tau_end", [&](const json& v, const std::string& p) { cfg.run.tau_end = number(v, p); });
    r.field("step", [&](const json& v, const std::string& p) { cfg.run.step = number(v, p); });
    r.field("checkpoints", [&](const json& v, const std::string& p) {
      if (v.is_array() && v.empty()) {
        cfg.run.checkpoints.clear();
        return;
      }
      cfg.run.checkpoints = number_list(v, p);
    });
    r.field("caustic_threshold", [&](const json& v, const std::string& p) { cfg.run.caustic_threshold = number(v, p); });
    r.field("cutoff_ratio", [&](const json& v, const std::string& p) { cfg.run.cutoff_ratio = number(v, p); });
    r.field("tolerances", [&](const json& v, const std::string& p) {
      ObjectReader t(v, p);
      t.field("hamiltonian", [&](const json& x, const std::string& q) { cfg.run.tolerances.hamiltonian = number(x, q); });
      t.field("symplectic", [&](const json& x, const std::string& q) { cfg.run.tolerances.symplectic = number(x, q); });
      t.field("residual", [&](const json& x, const std::string& q) { cfg.run.tolerances.residual = number(x, q); });
      t.finish();
    });
    r.finish();
  });
  top.field("output", [&](const json& j, const std::string& path) {
    ObjectReader r(j, path);
    r.field("csv", [&](const json& v, const std::string& p) { cfg.output.csv = string(v, p); });
    r.field("svg", [&](const json& v, const std::string& p) {
      if (v.is_null())
        cfg.output.svg.reset();
      else
        cfg.output.svg = string(v, p);
    });
    r.field("quantities", [&](const json& v, const std::string& p) {
      if (!v.is_array()) throw ValidationError(p + " must be a list");
      cfg.output.quantities.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string q = p + "[" + std::to_string(i) + "]";
        try {
          cfg.output.quantities.push_back(parse_front_quantity(string(v[i], q)));
        } catch (const ValidationError& e) {
          throw ValidationError(q + ": " + e.what());
        }
      }
    });
    r.field("levels", [&](const json& v, const std::string& p) {
      if (!v.is_array()) throw ValidationError(p + " must be a list");
      cfg.output.levels.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        ObjectReader lv(v[i], p + "[" + std::to_string(i) + "]");
        LevelRequest req;
        bool has_q = false, has_v = false;
        lv.field("quantity", [&](const json& x, const std::string& q) {
          try {
            req.quantity = parse_front_quantity(string(x, q));
          } catch (const ValidationError& e) {
            throw ValidationError(q + ": " + e.what());
          }
          has_q = true;
        });
        lv.field("value", [&](const json& x, const std::string& q) {
          req.value = number(x, q);
          has_v = true;
        });
        lv.finish();
        if (!has_q || !has_v)
          throw ValidationError(p + "[" + std::to_string(i) + "] needs quantity and value");
        cfg.output.levels.push_back(req);
      }
    });
    r.field("epsilon", [&](const json& v, const std::string& p) {
      if (v.is_null())
        cfg.output.epsilon.reset();
      else
        cfg.output.epsilon = number(v, p);
    });
    r.finish();
  });
  top.finish();

  // Range checks.
  require(cfg.medium.c > 0.0, "medium.c", "must be positive");
  require(cfg.medium.c_bot >= cfg.medium.c, "medium.c_bot", "must be at least medium.c");
  require(cfg.medium.h0 > 0.0, "medium.h0", "must be positive");
  for (std::size_t i = 0; i < cfg.medium.alpha.size(); ++i) {
    const double a = cfg.medium.alpha[i];
    const std::string p = cfg.medium.alpha.size() == 1 ? "medium.alpha" : "medium.alpha[" + std::to_string(i) + "]";
    require(a >= 0.0 && a <= 1.0, p, "must lie in [0, 1]");
  }
  require(cfg.mode.l >= 0, "mode.l", "must be non-negative");
  require(cfg.source.mu2.count >= 1, "source.mu2.count", "must be at least 1");
  require(cfg.source.freq0 > 0.0, "source.freq0", "must be positive");
  require(cfg.source.radius > 0.0, "source.radius", "must be positive");
  require(cfg.run.step > 0.0, "run.step", "must be positive");
  require(cfg.run.tau_end > 0.0, "run.tau_end", "must be positive");
  for (std::size_t i = 0; i < cfg.run.checkpoints.size(); ++i) {
    const double c = cfg.run.checkpoints[i];
    require(c > 0.0 && c <= cfg.run.tau_end, "run.checkpoints[" + std::to_string(i) + "]",
            "must lie in (0, run.tau_end]");
  }
  require(cfg.run.caustic_threshold > 0.0, "run.caustic_threshold", "must be positive");
  require(cfg.run.cutoff_ratio >= 0.0, "run.cutoff_ratio", "must be non-negative");
  if (cfg.output.epsilon) require(*cfg.output.epsilon > 0.0, "output.epsilon", "must be positive");
  return cfg;
}

json parse_config_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
}

json load_config_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_document(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

RunConfig parse_config(const std::string& text) { return config_from_json(parse_config_document(text)); }

RunConfig load_config(const std::string& path) { return config_from_json(load_config_document(path)); }

json canonical_json(const RunConfig& cfg) {
  json j;
  j["medium"] = {{"c", cfg.medium.c},
                 {"c_bot", cfg.medium.c_bot},
                 {"h0", cfg.medium.h0},
                 {"grad_h", {cfg.medium.grad_h.x(), cfg.medium.grad_h.y()}},
                 {"alpha", cfg.medium.alpha}};
  j["mode"] = {{"l", cfg.mode.l},
               {"lambda_tilde",
                {{"constant", cfg.mode.lambda_tilde.constant},
                 {"grad", {cfg.mode.lambda_tilde.grad.x(), cfg.mode.lambda_tilde.grad.y()}},
                 {"d_p_tau", cfg.mode.lambda_tilde.d_p_tau}}},
               {"derivatives", cfg.mode.derivatives == DerivativeSource::implicit ? "implicit" : "finite_difference"}};
  j["source"] = {{"mu1", cfg.source.mu1},
                 {"mu2",
                  {{"count", cfg.source.mu2.count},
                   {"min", cfg.source.mu2.min},
                   {"max", cfg.source.mu2.max},
                   {"endpoint", cfg.source.mu2.endpoint}}},
                 {"freq0", cfg.source.freq0},
                 {"dfreq", cfg.source.dfreq},
                 {"radius", cfg.source.radius},
                 {"amplitude", cfg.source.amplitude},
                 {"shell_mode", to_string(cfg.source.shell_mode)},
                 {"derivatives", cfg.source.derivatives == SourceDerivatives::analytic ? "analytic" : "finite_difference"}};
  j["run"] = {{"tau_end", cfg.run.tau_end},
              {"step", cfg.run.step},
              {"checkpoints", cfg.run.checkpoints},
              {"caustic_threshold", cfg.run.caustic_threshold},
              {"cutoff_ratio", cfg.run.cutoff_ratio},
              {"tolerances",
               {{"hamiltonian", cfg.run.tolerances.hamiltonian},
                {"symplectic", cfg.run.tolerances.symplectic},
                {"residual", cfg.run.tolerances.residual}}}};
  json quantities = json::array();
  for (FrontQuantity q : cfg.output.quantities) quantities.push_back(to_string(q));
  json levels = json::array();
  for (const LevelRequest& l : cfg.output.levels) levels.push_back({{"quantity", to_string(l.quantity)}, {"value", l.value}});
  j["output"] = {{"csv", cfg.output.csv},
                 {"svg", cfg.output.svg ? json(*cfg.output.svg) : json(nullptr)},
                 {"quantities", quantities},
                 {"levels", levels},
                 {"epsilon", cfg.output.epsilon ? json(*cfg.output.epsilon) : json(nullptr)}};
  return j;
}

std::string canonical_string(const RunConfig& cfg) { return canonical_json(cfg).dump(2) + "\n"; }

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ValidationError("override \"" + assignment + "\" must look like key.path=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  if (!doc.is_object()) doc = json::object();
  json* node = &doc;
  std::stringstream ss(key);
  std::string part, walked;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].empty()) throw ValidationError("override key \"" + key + "\" has an empty segment");
    walked += (walked.empty() ? "" : ".") + parts[i];
    if (i + 1 == parts.size()) {
      (*node)[parts[i]] = value;
    } else {
      json& next = (*node)[parts[i]];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) throw ValidationError("override: " + walked + " is not an object");
      node = &next;
    }
  }
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

}  // namespace modalray
