#pragma once

#include <string>
#include <vector>

namespace sae::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Table read(const std::string& path);

// Deterministic number formatting shared by all CSV writers.
std::string format(double v);

std::string join(const std::vector<std::string>& fields);

}  // namespace sae::csv
