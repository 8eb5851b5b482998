#pragma once

#include <string>
#include <vector>

#include "vcnet/trainer.hpp"

namespace vcnet::svg {

struct Series {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<double> x;
    std::vector<double> y;
};

// Minimal static line chart: axes, ticks, legend, one polyline per series.
std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series,
                       int width = 560, int height = 380);

// Two-panel figure from a training log: contrastive-loss curve and
// total-loss curve against the epoch index.
void write_loss_curves(const trainer::TrainLog& log, const std::string& path);

} // namespace vcnet::svg
