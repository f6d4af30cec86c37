#pragma once

#include <string>

namespace eled {

// Renders an eval-report JSON file to a plain-text table.
std::string render_report_table(const std::string& report_json_path);

// Rasterizes a loss-curve CSV (step,loss,lr) to a PNG line plot.
void plot_loss_curve(const std::string& csv_path, const std::string& png_path);

}  // namespace eled
