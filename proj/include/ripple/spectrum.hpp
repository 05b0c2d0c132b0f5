// spectrum.hpp — stationary spectrum of the resonance block: diagonalization,
// Mathieu-like groups (q, s) and separatrix classification of each group.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ripple/errors.hpp"
#include "ripple/linalg.hpp"
#include "ripple/model.hpp"

namespace ripple {

struct Eigensystem {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns
    double max_residual{0.0}; // max_j |H v_j - E_j v_j| / |H|
};

/// Full spectrum of a real symmetric matrix. Rejects non-symmetric input and
/// checks the residual of every eigenpair against 1e-9 |H|.
inline Eigensystem diagonalize(const Eigen::MatrixXd& h, double symmetry_tol = 1e-12) {
    if (h.rows() != h.cols()) throw NumericalError("diagonalize: matrix is not square");
    const double asym = h.rows() ? hermiticity_norm(h) : 0.0;
    if (asym > symmetry_tol)
        throw NumericalError("diagonalize: matrix is not Hermitian (defect " +
                             std::to_string(asym) + ")");
    auto eig = linalg::symmetric_eigen(h);
    Eigensystem out{std::move(eig.values), std::move(eig.vectors), 0.0};
    if (h.rows() == 0) return out;
    const double hnorm = std::max(h.cwiseAbs().rowwise().sum().maxCoeff(), 1e-300);
    Eigen::MatrixXd r = h * out.vectors;
    r -= out.vectors * out.values.asDiagonal();
    out.max_residual = r.colwise().norm().maxCoeff() / hnorm;
    if (out.max_residual > 1e-9)
        throw NumericalError("diagonalize: eigenpair residual " +
                             std::to_string(out.max_residual) + " exceeds 1e-9 |H|");
    return out;
}

inline Eigensystem diagonalize_block(const ResonanceBlock& block) {
    return diagonalize(block.matrix());
}

enum class LevelClass { inside, near_separatrix, above_separatrix, unresolved };

inline std::string_view to_string(LevelClass c) {
    switch (c) {
    case LevelClass::inside: return "inside";
    case LevelClass::near_separatrix: return "near_separatrix";
    case LevelClass::above_separatrix: return "above_separatrix";
    case LevelClass::unresolved: return "unresolved";
    }
    return "?";
}

struct Level {
    int s{0};
    double energy{0.0};
    Eigen::Index column{0};        // eigenvector column in SpectrumGroups::basis_map
    LevelClass cls{LevelClass::inside};
    double p_mean{0.0};
    double boundary_weight{0.0};   // probability on the truncation shell
};

struct Group {
    int q{0};
    std::vector<Level> levels;     // ascending energy, s = 0, 1, ...
};

struct GroupingOptions {
    double ambiguity{0.45};        // |<p> - q| above this is reported as ambiguous
    int strict_window{-1};         // throw if an ambiguous state lands in |q| <= window
};

struct SpectrumGroups {
    std::vector<Group> groups;     // ascending q
    double omega_n0{0.0};
    Eigen::VectorXd energies;
    Eigen::MatrixXd basis_map;     // eigenvectors over the ResonanceIndex rows
    std::vector<int> q_of_column;
    std::vector<int> s_of_column;
    std::vector<Eigen::Index> ambiguous;

    const Group* find(int q) const {
        for (const auto& g : groups)
            if (g.q == q) return &g;
        return nullptr;
    }
    Group* find(int q) {
        for (auto& g : groups)
            if (g.q == q) return &g;
        return nullptr;
    }
    Eigen::Index column(int q, int s) const {
        const Group* g = find(q);
        if (!g || s < 0 || s >= static_cast<int>(g->levels.size()))
            throw DomainError("no level (q=" + std::to_string(q) + ", s=" + std::to_string(s) + ")");
        return g->levels[static_cast<std::size_t>(s)].column;
    }
    std::size_t dim() const { return static_cast<std::size_t>(energies.size()); }
};

/// Rows lying on the outer shell of the truncation window.
inline std::vector<char> boundary_rows(const ResonanceBlock& block) {
    const auto& t = block.truncation();
    std::vector<char> out;
    out.reserve(block.dim());
    for (const auto& i : block.index_map())
        out.push_back(std::abs(i.r) == t.r_max || i.p == t.p_min || i.p == t.p_max);
    return out;
}

inline std::vector<int> p_of_rows(const ResonanceBlock& block) {
    std::vector<int> out;
    out.reserve(block.dim());
    for (const auto& i : block.index_map()) out.push_back(i.p);
    return out;
}

/// Assigns every eigenpair to the group q = round(<p>), where <p> is the
/// expectation of p in the eigenvector; levels inside a group are numbered by
/// ascending energy. `boundary` (optional) flags truncation-shell rows.
inline SpectrumGroups group_levels(const Eigen::VectorXd& values, const Eigen::MatrixXd& vectors,
                                   double omega_n0, std::span<const int> p_of_row,
                                   std::span<const char> boundary = {},
                                   const GroupingOptions& opt = {}) {
    const auto dim = values.size();
    if (vectors.rows() != static_cast<Eigen::Index>(p_of_row.size()) || vectors.cols() != dim)
        throw DomainError("group_levels: dimension mismatch");
    if (!boundary.empty() && boundary.size() != p_of_row.size())
        throw DomainError("group_levels: boundary mask has the wrong size");

    SpectrumGroups out;
    out.omega_n0 = omega_n0;
    out.energies = values;
    out.basis_map = vectors;
    out.q_of_column.resize(static_cast<std::size_t>(dim));
    out.s_of_column.resize(static_cast<std::size_t>(dim));

    std::vector<Level> levels(static_cast<std::size_t>(dim));
    for (Eigen::Index j = 0; j < dim; ++j) {
        double pm = 0.0, edge = 0.0;
        for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
            const double w = vectors(i, j) * vectors(i, j);
            pm += w * p_of_row[static_cast<std::size_t>(i)];
            if (!boundary.empty() && boundary[static_cast<std::size_t>(i)]) edge += w;
        }
        const int q = static_cast<int>(std::lround(pm));
        if (std::abs(pm - q) > opt.ambiguity) out.ambiguous.push_back(j);
        levels[static_cast<std::size_t>(j)] = {0, values(j), j, LevelClass::inside, pm, edge};
        out.q_of_column[static_cast<std::size_t>(j)] = q;
    }
    if (opt.strict_window >= 0) {
        for (auto j : out.ambiguous) {
            const int q = out.q_of_column[static_cast<std::size_t>(j)];
            if (std::abs(q) <= opt.strict_window)
                throw PhysicsError("ambiguous group assignment: eigenstate " + std::to_string(j) +
                                   " (E=" + std::to_string(values(j)) + ") has <p>=" +
                                   std::to_string(levels[static_cast<std::size_t>(j)].p_mean) +
                                   ", between groups " + std::to_string(q - 1) + ".." +
                                   std::to_string(q + 1));
        }
    }

    std::vector<int> qs(out.q_of_column);
    std::sort(qs.begin(), qs.end());
    qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
    for (int q : qs) out.groups.push_back(Group{q, {}});
    for (Eigen::Index j = 0; j < dim; ++j)
        out.find(out.q_of_column[static_cast<std::size_t>(j)])
            ->levels.push_back(levels[static_cast<std::size_t>(j)]);
    for (auto& g : out.groups) {
        std::stable_sort(g.levels.begin(), g.levels.end(),
                         [](const Level& a, const Level& b) { return a.energy < b.energy; });
        for (std::size_t s = 0; s < g.levels.size(); ++s) {
            g.levels[s].s = static_cast<int>(s);
            out.s_of_column[static_cast<std::size_t>(g.levels[s].column)] = static_cast<int>(s);
        }
    }
    return out;
}

inline SpectrumGroups group_levels(const Eigensystem& eig, const ResonanceBlock& block,
                                   const GroupingOptions& opt = {}) {
    const auto p = p_of_rows(block);
    const auto b = boundary_rows(block);
    return group_levels(eig.values, eig.vectors, block.params().omega_n0(), p, b, opt);
}

/// Differences E_{q+1,0} - E_{q,0} between the ground levels of adjacent groups
/// with |q| <= q_window (and q+1 also inside the window).
inline std::vector<double> group_spacings(const SpectrumGroups& g, int q_window) {
    std::vector<double> out;
    for (int q = -q_window; q < q_window; ++q) {
        const Group* a = g.find(q);
        const Group* b = g.find(q + 1);
        if (a && b && !a->levels.empty() && !b->levels.empty())
            out.push_back(b->levels.front().energy - a->levels.front().energy);
    }
    return out;
}

struct ClassifyOptions {
    double inside_tolerance{0.2};    // spacing within 20% of the bottom spacing counts as equidistant
    double pair_gap{0.1};            // pair if gap < 10% of the neighbouring spacings
    double band_fraction{0.5};       // separatrix band: reduced spacing < 0.5 * bottom spacing
    double max_boundary_weight{1e-3};// levels with more weight on the truncation shell are unresolved
    int min_levels{8};
};

struct SeparatrixInfo {
    int s_sep{-1};                   // lower level of the smallest (pair-reduced) spacing
    int M_s{0};                      // levels in the near-separatrix band
    int band_begin{-1};              // first and last s of the band
    int band_end{-1};
    int resolved_levels{0};
    int equidistant_levels{0};       // leading spacings within inside_tolerance of the bottom one
    double bottom_spacing{0.0};
    double bottom_spread{0.0};       // (max-min)/mean over the five lowest spacings
    double paired_fraction{0.0};     // share of levels above the band that sit in pairs
    int first_pair{-1};              // lower s of the first pair above the band
    std::vector<double> spacing_profile;   // raw E_{s+1} - E_s over resolved levels
    std::vector<double> reduced_spacing;   // spacings after collapsing pairs to their centres
    std::vector<int> pair_starts;
};

/// Labels the levels of one group relative to the separatrix.
///
/// Above the separatrix the levels come in quasi-degenerate doublets; these are
/// detected first and collapsed to their centres so that the accumulation point
/// shows up as the minimum of the reduced spacing. The near-separatrix band is
/// the contiguous run of reduced spacings below band_fraction * bottom spacing
/// around that minimum.
inline SeparatrixInfo classify_group(Group& group, const ClassifyOptions& opt = {}) {
    auto& lv = group.levels;
    int resolved = 0;
    while (resolved < static_cast<int>(lv.size()) &&
           lv[static_cast<std::size_t>(resolved)].boundary_weight <= opt.max_boundary_weight)
        ++resolved;
    if (resolved < opt.min_levels)
        throw PhysicsError("classify_group: group q=" + std::to_string(group.q) + " has only " +
                           std::to_string(resolved) + " resolved levels (need " +
                           std::to_string(opt.min_levels) + ")");

    SeparatrixInfo info;
    info.resolved_levels = resolved;
    auto& sp = info.spacing_profile;
    for (int s = 0; s + 1 < resolved; ++s)
        sp.push_back(lv[static_cast<std::size_t>(s + 1)].energy - lv[static_cast<std::size_t>(s)].energy);
    const int ns = static_cast<int>(sp.size());
    info.bottom_spacing = sp[0];
    {
        const int m = std::min(5, ns);
        double lo = sp[0], hi = sp[0], mean = 0.0;
        for (int i = 0; i < m; ++i) {
            lo = std::min(lo, sp[static_cast<std::size_t>(i)]);
            hi = std::max(hi, sp[static_cast<std::size_t>(i)]);
            mean += sp[static_cast<std::size_t>(i)] / m;
        }
        info.bottom_spread = (hi - lo) / mean;
    }
    while (info.equidistant_levels < ns &&
           std::abs(sp[static_cast<std::size_t>(info.equidistant_levels)] - info.bottom_spacing) <=
               opt.inside_tolerance * info.bottom_spacing)
        ++info.equidistant_levels;

    // doublets: gap small against the mean of the neighbouring spacings
    std::vector<char> pair_start(static_cast<std::size_t>(ns), 0);
    for (int i = 1; i < ns; ++i) {
        if (pair_start[static_cast<std::size_t>(i - 1)]) continue;
        const double left = sp[static_cast<std::size_t>(i - 1)];
        const double local = i + 1 < ns ? 0.5 * (left + sp[static_cast<std::size_t>(i + 1)]) : left;
        if (sp[static_cast<std::size_t>(i)] < opt.pair_gap * local) {
            pair_start[static_cast<std::size_t>(i)] = 1;
            info.pair_starts.push_back(i);
        }
    }

    // units: singlets or collapsed doublets
    struct Unit {
        double centre;
        int first, last;
    };
    std::vector<Unit> units;
    for (int s = 0; s < resolved; ++s) {
        if (s < ns && pair_start[static_cast<std::size_t>(s)]) {
            units.push_back({0.5 * (lv[static_cast<std::size_t>(s)].energy +
                                    lv[static_cast<std::size_t>(s + 1)].energy),
                             s, s + 1});
            ++s;
        } else {
            units.push_back({lv[static_cast<std::size_t>(s)].energy, s, s});
        }
    }
    const int nu = static_cast<int>(units.size());
    for (int j = 0; j + 1 < nu; ++j)
        info.reduced_spacing.push_back(units[static_cast<std::size_t>(j + 1)].centre -
                                       units[static_cast<std::size_t>(j)].centre);
    const auto& ru = info.reduced_spacing;
    const int jmin = static_cast<int>(std::min_element(ru.begin(), ru.end()) - ru.begin());
    if (jmin == 0 || jmin + 1 >= static_cast<int>(ru.size()))
        throw PhysicsError("classify_group: no interior spacing minimum in group q=" +
                           std::to_string(group.q));
    info.s_sep = units[static_cast<std::size_t>(jmin)].first;

    const double cut = opt.band_fraction * info.bottom_spacing;
    int jlo = jmin, jhi = jmin;
    while (jlo > 0 && ru[static_cast<std::size_t>(jlo - 1)] < cut) --jlo;
    while (jhi + 1 < static_cast<int>(ru.size()) && ru[static_cast<std::size_t>(jhi + 1)] < cut) ++jhi;
    const int u_lo = ru[static_cast<std::size_t>(jmin)] < cut ? jlo : jmin;
    const int u_hi = ru[static_cast<std::size_t>(jmin)] < cut ? jhi + 1 : jmin;
    info.band_begin = units[static_cast<std::size_t>(u_lo)].first;
    info.band_end = units[static_cast<std::size_t>(u_hi)].last;
    info.M_s = info.band_end - info.band_begin + 1;

    int above = 0, paired = 0;
    for (int s = 0; s < static_cast<int>(lv.size()); ++s) {
        auto& l = lv[static_cast<std::size_t>(s)];
        if (s >= resolved) {
            l.cls = LevelClass::unresolved;
        } else if (s < info.band_begin) {
            l.cls = LevelClass::inside;
        } else if (s <= info.band_end) {
            l.cls = LevelClass::near_separatrix;
        } else {
            l.cls = LevelClass::above_separatrix;
            ++above;
            const bool starts = s < ns && pair_start[static_cast<std::size_t>(s)];
            const bool ends = s > 0 && pair_start[static_cast<std::size_t>(s - 1)];
            if (starts || ends) ++paired;
            if (starts && info.first_pair < 0) info.first_pair = s;
        }
    }
    info.paired_fraction = above ? static_cast<double>(paired) / above : 0.0;
    return info;
}

/// Amplitudes C_j = <v_j | psi> over the eigenvector columns of `groups`.
inline Eigen::VectorXcd project_onto_groups(const Eigen::VectorXcd& psi, const SpectrumGroups& groups) {
    if (psi.size() != groups.basis_map.rows())
        throw DomainError("project_onto_groups: state has dimension " + std::to_string(psi.size()) +
                          ", basis has " + std::to_string(groups.basis_map.rows()));
    return groups.basis_map.transpose() * psi;
}

/// Inverse of project_onto_groups.
inline Eigen::VectorXcd reconstruct_state(const Eigen::VectorXcd& c, const SpectrumGroups& groups) {
    if (c.size() != groups.basis_map.cols()) throw DomainError("reconstruct_state: dimension mismatch");
    return groups.basis_map * c;
}

}  // namespace ripple
