#pragma once

#include <algorithm>
#include <vector>

#include "lse/core_types.hpp"
#include "lse/sparse_matrix.hpp"

namespace lse {

/// Greedy minimum-degree ordering on the undirected graph of a symmetric
/// matrix given by its lower triangle.  Elimination turns the neighbours
/// of the selected vertex into a clique; ties go to the smallest index.
/// Returns the permutation in elimination order (map[k] = k-th pivot).
inline Permutation min_degree_ordering(const SparseMatrix& lower) {
    idx n = lower.ncols();
    if (lower.nrows() != n) throw ContractViolation("min_degree_ordering: matrix must be square");
    std::vector<std::vector<idx>> adj(static_cast<size_t>(n));
    for (idx j = 0; j < n; ++j) {
        for (idx k = lower.col_begin(j); k < lower.col_end(j); ++k) {
            idx i = lower.row_at(k);
            if (i == j) continue;
            adj[static_cast<size_t>(j)].push_back(i);
            adj[static_cast<size_t>(i)].push_back(j);
        }
    }
    for (auto& nbrs : adj) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }

    std::vector<char> eliminated(static_cast<size_t>(n), 0);
    std::vector<idx> order;
    order.reserve(static_cast<size_t>(n));
    std::vector<idx> live;  // scratch

    for (idx step = 0; step < n; ++step) {
        idx best = -1;
        idx best_deg = n + 1;
        for (idx v = 0; v < n; ++v) {
            if (eliminated[static_cast<size_t>(v)]) continue;
            idx deg = static_cast<idx>(adj[static_cast<size_t>(v)].size());
            if (deg < best_deg) {
                best_deg = deg;
                best = v;
            }
        }
        order.push_back(best);
        eliminated[static_cast<size_t>(best)] = 1;

        live.clear();
        for (idx u : adj[static_cast<size_t>(best)])
            if (!eliminated[static_cast<size_t>(u)]) live.push_back(u);

        // connect the remaining neighbours into a clique
        for (idx u : live) {
            auto& au = adj[static_cast<size_t>(u)];
            std::vector<idx> merged;
            merged.reserve(au.size() + live.size());
            size_t ia = 0, ib = 0;
            while (ia < au.size() || ib < live.size()) {
                idx cand;
                if (ib == live.size() || (ia < au.size() && au[ia] <= live[ib])) {
                    cand = au[ia++];
                    if (ib < live.size() && live[ib] == cand) ++ib;
                } else {
                    cand = live[ib++];
                }
                if (cand == u || eliminated[static_cast<size_t>(cand)]) continue;
                if (merged.empty() || merged.back() != cand) merged.push_back(cand);
            }
            au = std::move(merged);
        }
    }
    return Permutation(std::move(order));
}

}  // namespace lse
