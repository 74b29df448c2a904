#pragma once

#include <string>
#include <vector>

namespace bnet::svg {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

/// Minimal self-contained vector line plot so reports need no plotting
/// dependency. Output is deterministic for identical inputs.
void write_line_plot(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series,
                     const std::string& comment = "");

} // namespace bnet::svg
