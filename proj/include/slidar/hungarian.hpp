#pragma once

#include <vector>

namespace slidar {

// Exact min-cost assignment (Jonker-Volgenant style shortest augmenting
// paths, O(n^3)). cost is rectangular rows x cols with rows <= cols; returns
// for each row the assigned column.
std::vector<int> min_cost_assignment(const std::vector<std::vector<double>> &cost);

double assignment_cost(const std::vector<std::vector<double>> &cost,
                       const std::vector<int> &assignment);

} // namespace slidar
