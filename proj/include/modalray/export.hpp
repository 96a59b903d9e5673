/**
 * @file export.hpp
 * @brief Deterministic CSV and SVG emission.
 */
#ifndef MODALRAY_EXPORT_HPP
#define MODALRAY_EXPORT_HPP

#include "modalray/dynamics.hpp"
#include "modalray/fronts.hpp"

#include <string>
#include <vector>

namespace modalray {

/// Header shared by trajectory and front-slice tables.
inline constexpr const char* kTraceHeader =
    "l,alpha,mu1,mu2,tau_nat,tau,x,y,p_tau,p_x,p_y,phase,amplitude,T_diss,det_Ir_fr,validity";

/// 17 significant digits; "nan" and "inf" spelled out.
std::string format_number(double v);

std::string trace_row(int l, double alpha, const Vec2& mu, const RayState& s,
                      const AmplitudeSample& a);
/// Row for a checkpoint past a ray's truncation.
std::string cutoff_row(int l, double alpha, const Vec2& mu, double tau_nat);

void write_text_file(const std::string& path, const std::string& content);

struct SvgSeries {
  std::string label;
  std::vector<std::vector<Vec2>> segments;  ///< polylines; separate segments mark gaps
};

struct SvgPanel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<SvgSeries> series;
};

/// Panels side by side, each auto-fitted with 5% margins, one shared legend.
std::string render_svg(const std::vector<SvgPanel>& panels);

}  // namespace modalray

#endif
