/**
 * @file config.hpp
 * @brief Run configuration: JSON ingestion, validation, overrides, canonical form.
 */
#ifndef MODALRAY_CONFIG_HPP
#define MODALRAY_CONFIG_HPP

#include "modalray/fronts.hpp"
#include "modalray/hamiltonian.hpp"
#include "modalray/source.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace modalray {

/// lambda_tilde = constant + grad . r + d_p_tau * p_tau.
struct LambdaTildeConfig {
  double constant = 0.0;
  Vec2 grad = Vec2::Zero();
  double d_p_tau = 0.0;

  bool is_zero() const { return constant == 0.0 && grad.isZero() && d_p_tau == 0.0; }
  LambdaTilde function() const;
};

struct Mu2Grid {
  int count = 72;
  double min = -3.141592653589793;
  double max = 3.141592653589793;
  bool endpoint = false;
};

struct LevelRequest {
  FrontQuantity quantity = FrontQuantity::tau;
  double value = 0.0;
};

struct RunConfig {
  struct {
    double c = 1500.0;
    double c_bot = 1700.0;
    double h0 = 10.0;
    Vec2 grad_h = Vec2(1e-3, 0.0);
    std::vector<double> alpha{0.5};
  } medium;
  struct {
    int l = 1;
    LambdaTildeConfig lambda_tilde;
    DerivativeSource derivatives = DerivativeSource::implicit;
  } mode;
  struct {
    std::vector<double> mu1{0.0};
    Mu2Grid mu2;
    double freq0 = 300.0;
    double dfreq = 50.0;
    double radius = 1.0;
    ShellMode shell_mode = ShellMode::strict;
    double amplitude = 1.0;
    SourceDerivatives derivatives = SourceDerivatives::finite_difference;
  } source;
  struct {
    double tau_end = 10.0;
    double step = 1e-3;
    std::vector<double> checkpoints{5.0, 10.0};
    double caustic_threshold = 1e-6;
    double cutoff_ratio = 1e-8;
    struct {
      double hamiltonian = 1e-8;
      double symplectic = 1e-6;
      double residual = 1e-10;
    } tolerances;
  } run;
  struct {
    std::string csv;  ///< empty: "<command>.csv"
    std::optional<std::string> svg;
    std::vector<FrontQuantity> quantities{FrontQuantity::amplitude};
    std::vector<LevelRequest> levels;
    std::optional<double> epsilon;
  } output;

  MediumModel medium_model(double alpha) const;
  HamiltonianModel hamiltonian_model(double alpha) const;
  RingSource source_model(const HamiltonianModel& model) const;
  IntegrationSettings integration_settings() const;
};

/// Parses and validates; unknown keys and bad values throw with the key path.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
/// Raw JSON document; ParseError when unreadable or malformed.
nlohmann::json load_config_document(const std::string& path);
nlohmann::json parse_config_document(const std::string& text);
RunConfig parse_config(const std::string& text);

/// Fully populated JSON with defaults filled in; stable key order.
nlohmann::json canonical_json(const RunConfig& cfg);
std::string canonical_string(const RunConfig& cfg);

/// Applies "a.b.c=value" to a JSON document. The value is read as JSON, else as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(const std::string& data);

}  // namespace modalray

#endif
