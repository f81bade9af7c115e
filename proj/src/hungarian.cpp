#include "slidar/hungarian.hpp"

#include <limits>
#include <stdexcept>

namespace slidar {

std::vector<int> min_cost_assignment(const std::vector<std::vector<double>> &cost) {
    const int n = static_cast<int>(cost.size());
    if (n == 0) return {};
    const int m = static_cast<int>(cost[0].size());
    if (m < n) throw std::invalid_argument("assignment needs rows <= cols");
    const double inf = std::numeric_limits<double>::infinity();

    // 1-based potentials over rows (u) and columns (v)
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> col_to_row(m + 1, 0);
    std::vector<int> way(m + 1, 0);

    for (int i = 1; i <= n; ++i) {
        col_to_row[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, false);
        do {
            used[j0] = true;
            int i0 = col_to_row[j0], j1 = -1;
            double delta = inf;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[col_to_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (col_to_row[j0] != 0);
        do {
            int j1 = way[j0];
            col_to_row[j0] = col_to_row[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> assignment(n, -1);
    for (int j = 1; j <= m; ++j)
        if (col_to_row[j] > 0) assignment[col_to_row[j] - 1] = j - 1;
    return assignment;
}

double assignment_cost(const std::vector<std::vector<double>> &cost,
                       const std::vector<int> &assignment) {
    double total = 0.0;
    for (size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] >= 0) total += cost[i][assignment[i]];
    return total;
}

} // namespace slidar
