#include "modalray/run.hpp"

#include "modalray/errors.hpp"
#include "modalray/export.hpp"
#include "modalray/modes.hpp"
#include "modalray/parallel.hpp"
#include "modalray/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace modalray {

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MODALRAY_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> nominal_samples(const IntegrationSettings& settings) {
  std::vector<double> out{0.0};
  for (double c : settings.checkpoints)
    if (c > 0.0 && c <= settings.tau_end) out.push_back(c);
  out.push_back(settings.tau_end);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<FanRun> compute_fans(const RunConfig& cfg, const IntegrationSettings& settings,
                                 unsigned threads) {
  const auto mu2 = mu2_grid(cfg.source.mu2.count, cfg.source.mu2.min, cfg.source.mu2.max,
                            cfg.source.mu2.endpoint);
  std::vector<FanRun> fans;
  for (double alpha : cfg.medium.alpha)
    for (double mu1 : cfg.source.mu1) {
      FanRun f{alpha, mu1, cfg.hamiltonian_model(alpha), RayFan{}, {}};
      f.fan.rays.resize(mu2.size());
      f.fan.checkpoints = settings.checkpoints;
      if (settings.propagators) f.amplitudes.resize(mu2.size());
      fans.push_back(std::move(f));
    }

  const std::size_t n = mu2.size();
  parallel_for(fans.size() * n, resolve_threads(threads), [&](std::size_t i) {
    FanRun& f = fans[i / n];
    const RingSource source = cfg.source_model(f.model);
    const SourceNode node = source.node(Vec2(f.mu1, mu2[i % n]));
    source.validate(node, f.model, cfg.source.shell_mode);
    RaySolution ray = integrate_ray(f.model, node, settings);
    if (settings.propagators)
      f.amplitudes[i % n] = amplitude_track(f.model, ray, cfg.run.caustic_threshold);
    f.fan.rays[i % n] = std::move(ray);
  });
  return fans;
}

namespace {

fs::path output_path(const RunOptions& opt, const std::string& configured, const std::string& fallback) {
  const fs::path p = configured.empty() ? fs::path(fallback) : fs::path(configured);
  return p.is_absolute() ? p : fs::path(opt.output_dir) / p;
}

fs::path sibling(const fs::path& csv, const std::string& suffix) {
  return csv.parent_path() / (csv.stem().string() + suffix);
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

struct Manifest {
  std::string command;
  std::map<std::string, long> flags;
  std::vector<std::string> files;
};

void write_manifest(const RunConfig& cfg, const RunOptions& opt, const Manifest& m) {
  json j;
  j["command"] = m.command;
  j["config_hash"] = fnv1a_hex(canonical_string(cfg));
  j["config"] = canonical_json(cfg);
  j["checkpoints"] = nominal_samples(cfg.integration_settings());
  j["flags"] = m.flags;
  j["files"] = m.files;
  const fs::path p = fs::path(opt.output_dir) / ("manifest_" + m.command + ".json");
  ensure_parent(p);
  write_text_file(p.string(), j.dump(2) + "\n");
}

std::string rel(const RunOptions& opt, const fs::path& p) {
  return p.lexically_relative(fs::path(opt.output_dir)).generic_string();
}

std::string fan_label(const FanRun& f, int l, std::optional<double> tau) {
  std::ostringstream s;
  s << "alpha=" << f.alpha << " l=" << l << " mu1=" << f.mu1;
  if (tau) s << " tau=" << *tau;
  return s.str();
}

bool periodic_grid(const RunConfig& cfg) {
  const double span = cfg.source.mu2.max - cfg.source.mu2.min;
  return !cfg.source.mu2.endpoint && std::abs(span - 2.0 * std::numbers::pi) < 1e-9;
}

double front_value(FrontQuantity q, const RayState& s, const AmplitudeSample& a) {
  switch (q) {
    case FrontQuantity::tau_nat: return s.tau_nat;
    case FrontQuantity::tau: return s.f(idx::tau);
    case FrontQuantity::phase: return s.phase;
    case FrontQuantity::amplitude: return a.value;
    case FrontQuantity::arclen: return s.arclen;
    case FrontQuantity::T_diss: return s.T_diss;
  }
  return std::nan("");
}

/// Slice rows and SVG panels for the checkpoints of a set of fans.
struct Slices {
  std::string csv;
  std::string raw_time_csv;
  std::vector<SvgPanel> panels;
};

Slices checkpoint_slices(const RunConfig& cfg, const std::vector<FanRun>& fans,
                         const std::vector<double>& taus, Manifest& manifest) {
  Slices out;
  out.csv = std::string(kTraceHeader) + "\n";
  out.raw_time_csv = "l,alpha,mu1,mu2,tau_nat,tau,t\n";
  SvgPanel positions{"fronts", "x", "y", {}};
  std::vector<SvgPanel> quantity_panels;
  for (FrontQuantity q : cfg.output.quantities)
    quantity_panels.push_back({to_string(q) + " vs mu2", "mu2", to_string(q), {}});
  const bool closed = periodic_grid(cfg);
  const int l = cfg.mode.l;

  for (const FanRun& f : fans) {
    for (std::size_t j = 0; j < f.fan.rays.size(); ++j) {
      const RaySolution& ray = f.fan.rays[j];
      for (double tau : taus) {
        const auto i = ray.find(tau);
        if (!i) {
          out.csv += cutoff_row(l, f.alpha, ray.source.mu, tau) + "\n";
          ++manifest.flags["cutoff"];
          continue;
        }
        const AmplitudeSample a = f.amplitudes.empty() ? AmplitudeSample{} : f.amplitudes[j][*i];
        out.csv += trace_row(l, f.alpha, ray.source.mu, ray.samples[*i], a) + "\n";
        ++manifest.flags[to_string(a.validity)];
        if (cfg.output.epsilon) {
          const double t = ray.samples[*i].f(idx::tau) / (*cfg.output.epsilon * cfg.medium.c_bot);
          out.raw_time_csv += std::to_string(l);
          for (double v : {f.alpha, ray.source.mu.x(), ray.source.mu.y(), tau,
                           ray.samples[*i].f(idx::tau), t})
            out.raw_time_csv += "," + format_number(v);
          out.raw_time_csv += "\n";
        }
      }
    }

    for (double tau : taus) {
      if (tau == 0.0) continue;
      SvgSeries pos{fan_label(f, l, tau), {{}}};
      std::vector<SvgSeries> qs(quantity_panels.size(), SvgSeries{fan_label(f, l, tau), {{}}});
      bool all_valid = true;
      for (std::size_t j = 0; j < f.fan.rays.size(); ++j) {
        const RaySolution& ray = f.fan.rays[j];
        const auto i = ray.find(tau);
        const AmplitudeSample a = (!i || f.amplitudes.empty()) ? AmplitudeSample{} : f.amplitudes[j][*i];
        if (!i || a.validity != Validity::ok) {
          all_valid = false;
          if (!pos.segments.back().empty()) pos.segments.emplace_back();
          for (auto& s : qs)
            if (!s.segments.back().empty()) s.segments.emplace_back();
          continue;
        }
        const RayState& s = ray.samples[*i];
        pos.segments.back().emplace_back(s.f(idx::x), s.f(idx::y));
        for (std::size_t k = 0; k < qs.size(); ++k)
          qs[k].segments.back().emplace_back(ray.source.mu.y(),
                                             front_value(cfg.output.quantities[k], s, a));
      }
      if (closed && all_valid && !pos.segments.front().empty())
        pos.segments.front().push_back(pos.segments.front().front());
      positions.series.push_back(std::move(pos));
      for (std::size_t k = 0; k < qs.size(); ++k) quantity_panels[k].series.push_back(std::move(qs[k]));
    }
  }
  out.panels.push_back(std::move(positions));
  for (auto& p : quantity_panels) out.panels.push_back(std::move(p));
  return out;
}

std::string level_rows(const RunConfig& cfg, const std::vector<FanRun>& fans, Manifest& manifest) {
  std::string csv = "l,alpha,mu1,mu2,quantity,level,tau_nat,tau,x,y,value,validity,gap\n";
  for (const LevelRequest& req : cfg.output.levels)
    for (const FanRun& f : fans) {
      const Front front = extract_front(f.model, f.fan, req.quantity, req.value, cfg.run.caustic_threshold);
      manifest.flags["level_not_reached"] += static_cast<long>(front.level_not_reached.size());
      for (const FrontPoint& p : front.points) {
        csv += std::to_string(cfg.mode.l);
        for (double v : {f.alpha, p.mu.x(), p.mu.y()}) csv += "," + format_number(v);
        csv += "," + to_string(req.quantity);
        for (double v : {req.value, p.tau_nat, p.r(0), p.r(1), p.r(2), p.value}) csv += "," + format_number(v);
        csv += "," + to_string(p.validity) + "," + (p.gap ? "1" : "0") + "\n";
      }
    }
  return csv;
}

int emit_fan_outputs(const std::string& command, const RunConfig& cfg, const RunOptions& opt,
                     const std::vector<FanRun>& fans, const std::vector<double>& taus) {
  Manifest manifest{command, {{"ok", 0}, {"near_caustic", 0}, {"cutoff", 0}}, {}};
  const Slices slices = checkpoint_slices(cfg, fans, taus, manifest);

  long truncated = 0;
  for (const FanRun& f : fans)
    for (const RaySolution& r : f.fan.rays) truncated += r.truncated ? 1 : 0;
  manifest.flags["truncated_rays"] = truncated;

  const fs::path csv = output_path(opt, cfg.output.csv, command + ".csv");
  ensure_parent(csv);
  write_text_file(csv.string(), slices.csv);
  manifest.files.push_back(rel(opt, csv));

  if (cfg.output.epsilon) {
    const fs::path p = sibling(csv, "_raw_time.csv");
    write_text_file(p.string(), slices.raw_time_csv);
    manifest.files.push_back(rel(opt, p));
  }
  if (command == "fronts" && !cfg.output.levels.empty()) {
    manifest.flags["level_not_reached"] = 0;
    const fs::path p = sibling(csv, "_levels.csv");
    write_text_file(p.string(), level_rows(cfg, fans, manifest));
    manifest.files.push_back(rel(opt, p));
  }
  if (cfg.output.svg) {
    const fs::path p = output_path(opt, *cfg.output.svg, command + ".svg");
    ensure_parent(p);
    write_text_file(p.string(), render_svg(slices.panels));
    manifest.files.push_back(rel(opt, p));
  }
  write_manifest(cfg, opt, manifest);
  return 0;
}

}  // namespace

int run_modes(const RunConfig& cfg, const RunOptions& opt) {
  const auto mu2 = mu2_grid(cfg.source.mu2.count, cfg.source.mu2.min, cfg.source.mu2.max,
                            cfg.source.mu2.endpoint);
  std::string csv = "l,alpha,mu1,mu2,p_tau,h,w_sq,gamma,k,lambda,norm_psi_sq,beta_1,beta_alpha,residual\n";
  Manifest manifest{"modes", {{"modes", 0}}, {}};
  for (double alpha : cfg.medium.alpha) {
    const HamiltonianModel model = cfg.hamiltonian_model(alpha);
    const RingSource source = cfg.source_model(model);
    for (double mu1 : cfg.source.mu1)
      for (double m2 : mu2) {
        const Vec2 mu(mu1, m2);
        const Vec6 f0 = source.point(mu);
        const Vec2 r(f0(idx::x), f0(idx::y));
        const double p_tau = source.p_tau(mu1);
        const double h = model.medium().depth(r);
        const double w_sq = duct_strength(model.medium(), p_tau, r);
        const int count = mode_count(std::sqrt(w_sq));
        for (int l = 0; l < count; ++l) {
          const VerticalMode m = solve_mode(l, alpha, w_sq, h);
          csv += std::to_string(l);
          for (double v : {alpha, mu1, m2, p_tau, h, w_sq, m.gamma, m.k, m.lambda, m.norm_psi_sq,
                           m.beta_1, m.beta_alpha, m.residual})
            csv += "," + format_number(v);
          csv += "\n";
          ++manifest.flags["modes"];
        }
      }
  }
  const fs::path p = output_path(opt, cfg.output.csv, "modes.csv");
  ensure_parent(p);
  write_text_file(p.string(), csv);
  manifest.files.push_back(rel(opt, p));
  write_manifest(cfg, opt, manifest);
  return 0;
}

int run_trace(const RunConfig& cfg, const RunOptions& opt) {
  IntegrationSettings s = cfg.integration_settings();
  s.propagators = true;
  const auto fans = compute_fans(cfg, s, opt.threads);
  return emit_fan_outputs("trace", cfg, opt, fans, nominal_samples(s));
}

int run_fronts(const RunConfig& cfg, const RunOptions& opt) {
  IntegrationSettings s = cfg.integration_settings();
  s.propagators = true;
  const auto fans = compute_fans(cfg, s, opt.threads);
  std::vector<double> taus;
  for (double c : cfg.run.checkpoints)
    if (c > 0.0 && c <= s.tau_end) taus.push_back(c);
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  return emit_fan_outputs("fronts", cfg, opt, fans, taus);
}

int run_verify(const RunConfig& cfg, const RunOptions& opt) {
  const auto checks = run_invariants(cfg, opt.threads);
  std::string csv = "suite,name,value,tolerance,pass\n";
  Manifest manifest{"verify", {{"pass", 0}, {"fail", 0}}, {}};
  for (const CheckResult& c : checks) {
    csv += c.suite + "," + c.name + "," + format_number(c.value) + "," + format_number(c.tolerance) +
           "," + (c.pass ? "1" : "0") + "\n";
    ++manifest.flags[c.pass ? "pass" : "fail"];
  }
  const fs::path p = output_path(opt, cfg.output.csv, "verify.csv");
  ensure_parent(p);
  write_text_file(p.string(), csv);
  manifest.files.push_back(rel(opt, p));
  write_manifest(cfg, opt, manifest);
  return manifest.flags["fail"] == 0 ? 0 : 1;
}

int run_command(const std::string& command, const std::string& config_path,
                const std::vector<std::string>& overrides, const RunOptions& opt, std::ostream& err) {
  try {
    json doc = config_path.empty() ? json::object() : load_config_document(config_path);
    for (const auto& o : overrides) apply_override(doc, o);
    const RunConfig cfg = config_from_json(doc);
    if (command == "modes") return run_modes(cfg, opt);
    if (command == "trace") return run_trace(cfg, opt);
    if (command == "fronts") return run_fronts(cfg, opt);
    if (command == "verify") {
      const int rc = run_verify(cfg, opt);
      if (rc != 0) err << "verify: invariant checks failed, see verify.csv\n";
      return rc;
    }
    throw ValidationError("unknown command \"" + command + "\"");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.error_class());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorClass::post_processing);
  }
}

}  // namespace modalray
