#pragma once

// Static SVG figures from a token table.

#include <span>
#include <string>
#include <vector>

#include "artic/diagnostics.h"

namespace artic {

// Writes scatter_lag_vs_duration.svg (one panel per speaker x condition with
// its OLS line), box_lag_by_condition.svg, box_tb_by_condition.svg and
// box_tb_by_speaker.svg. Excluded tokens are skipped. Returns the paths.
// Throws DataError when no usable tokens remain.
std::vector<std::string> emit_plots(std::span<const TokenRecord> tokens, const std::string& out_dir);

// Individual renderers, exposed for testing.
std::string render_scatter_svg(std::span<const TokenRecord> tokens);
std::string render_box_svg(const std::string& title, const std::string& y_label,
                           const std::vector<std::pair<std::string, std::vector<double>>>& groups);

}  // namespace artic
