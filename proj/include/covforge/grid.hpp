#pragma once

#include "covforge/errors.hpp"
#include "covforge/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace covforge {

// One axis of a tensor-product sampling grid. An axis with a single node is a
// slice: the grid sits at `min` along it, and derivatives across it are still
// taken by central differences using the smallest active spacing.
struct Axis {
    std::string name;
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 1;

    bool active() const { return count > 1; }
    double spacing() const { return active() ? (max - min) / static_cast<double>(count - 1) : 0.0; }
    double coord(std::size_t i) const { return active() ? min + static_cast<double>(i) * spacing() : min; }
};

struct GridSpec {
    std::vector<Axis> axes;

    std::size_t dims() const { return axes.size(); }

    std::size_t node_count() const
    {
        std::size_t n = 1;
        for (const auto& a : axes) n *= a.count;
        return n;
    }

    double min_active_spacing() const
    {
        double h = std::numeric_limits<double>::infinity();
        for (const auto& a : axes)
            if (a.active()) h = std::min(h, a.spacing());
        return h;
    }

    // Throws DomainTooSmall for axes with 0 or 2 nodes, or when no axis is active.
    void validate() const
    {
        bool any_active = false;
        for (const auto& a : axes) {
            if (a.count == 0 || a.count == 2)
                throw DomainTooSmall("axis '" + a.name + "' has " + std::to_string(a.count)
                                     + " nodes; need at least 3 (or exactly 1 for a slice)");
            if (a.active()) {
                if (!(a.max > a.min))
                    throw DomainTooSmall("axis '" + a.name + "' has an empty extent");
                any_active = true;
            }
        }
        if (!any_active) throw DomainTooSmall("grid has no axis with at least 3 nodes");
    }

    // Halves every active spacing: count -> 2 count - 1.
    GridSpec refined() const
    {
        GridSpec g = *this;
        for (auto& a : g.axes)
            if (a.active()) a.count = 2 * a.count - 1;
        return g;
    }
};

inline GridSpec spacetime_grid(Axis t, Axis x, Axis y, Axis z)
{
    t.name = "t";
    x.name = "x";
    y.name = "y";
    z.name = "z";
    return GridSpec{{t, x, y, z}};
}

struct NormPair {
    double max_norm = 0.0;
    double l2_norm = 0.0; // root mean square over evaluated nodes
};

// Read-only view of one interior node during a residual sweep: the sampled
// field components at the node and central differences along every axis.
class NodeStencil {
public:
    std::span<const double> coords() const { return coords_; }
    double coord(std::size_t axis) const { return coords_[axis]; }
    double value(std::size_t k) const { return center_[k]; }
    double step(std::size_t axis) const { return h_[axis]; }

    double d(std::size_t axis, std::size_t k) const
    {
        return (plus_[axis][k] - minus_[axis][k]) / (2.0 * h_[axis]);
    }

    double d2(std::size_t axis, std::size_t k) const
    {
        return (plus_[axis][k] - 2.0 * center_[k] + minus_[axis][k]) / (h_[axis] * h_[axis]);
    }

private:
    template <class F, class R, class E>
    friend struct SweepEngine;

    std::vector<double> coords_;
    const double* center_ = nullptr;
    std::vector<const double*> plus_;
    std::vector<const double*> minus_;
    std::vector<double> h_;
};

struct SweepResult {
    std::vector<NormPair> norms;
    std::size_t nodes = 0;
    std::size_t excluded = 0;
};

// Field: void(std::span<const double> coords, std::span<double> out)
// Residual: void(const NodeStencil&, std::span<double> out)
// Exclude: bool(std::span<const double> coords)
//
// Samples the field slice by slice along the first active axis, keeping only
// three slices in memory, so each node is evaluated once.
template <class Field, class Residual, class Exclude>
struct SweepEngine {
    const GridSpec& grid;
    std::size_t ncomp;
    std::size_t nres;
    const Field& field;
    const Residual& residual;
    const Exclude* exclude;
    // Optional per-axis [lo, hi] window; nodes outside it are skipped silently.
    const std::vector<std::pair<double, double>>* window_box = nullptr;

    SweepResult run() const
    {
        grid.validate();
        const std::size_t dims = grid.dims();
        std::size_t window = dims;
        for (std::size_t a = 0; a < dims; ++a)
            if (grid.axes[a].active()) {
                window = a;
                break;
            }

        // Mixed-radix layout of the remaining axes inside one slice.
        std::vector<std::size_t> stride(dims, 0);
        std::size_t slice_size = 1;
        for (std::size_t a = dims; a-- > 0;) {
            if (a == window) continue;
            stride[a] = slice_size;
            slice_size *= grid.axes[a].count;
        }
        const double h_slice = grid.min_active_spacing();
        std::vector<double> h(dims);
        for (std::size_t a = 0; a < dims; ++a) h[a] = grid.axes[a].active() ? grid.axes[a].spacing() : h_slice;

        auto node_coords = [&](std::size_t iw, std::size_t offset, std::vector<double>& c) {
            c.resize(dims);
            c[window] = grid.axes[window].coord(iw);
            for (std::size_t a = 0; a < dims; ++a) {
                if (a == window) continue;
                const std::size_t idx = (offset / stride[a]) % grid.axes[a].count;
                c[a] = grid.axes[a].coord(idx);
            }
        };
        auto interior = [&](std::size_t offset) {
            for (std::size_t a = 0; a < dims; ++a) {
                if (a == window || !grid.axes[a].active()) continue;
                const std::size_t idx = (offset / stride[a]) % grid.axes[a].count;
                if (idx == 0 || idx + 1 == grid.axes[a].count) return false;
            }
            return true;
        };
        auto inside_box = [&](const std::vector<double>& c) {
            if (!window_box) return true;
            for (std::size_t a = 0; a < dims; ++a) {
                const double tol = 1e-9 * std::max(1.0, std::abs(c[a]));
                if (c[a] < (*window_box)[a].first - tol || c[a] > (*window_box)[a].second + tol) return false;
            }
            return true;
        };

        std::vector<std::vector<double>> ring(3, std::vector<double>(slice_size * ncomp));
        auto fill_slice = [&](std::size_t iw, std::vector<double>& buf) {
            parallel_for(slice_size, [&](std::size_t b, std::size_t e, std::size_t) {
                std::vector<double> c;
                for (std::size_t o = b; o < e; ++o) {
                    node_coords(iw, o, c);
                    field(std::span<const double>(c), std::span<double>(buf.data() + o * ncomp, ncomp));
                }
            });
        };

        const std::size_t workers = worker_count();
        struct Acc {
            std::vector<double> max, sumsq;
            std::size_t nodes = 0, excluded = 0;
        };
        std::vector<Acc> acc(workers);
        for (auto& a : acc) {
            a.max.assign(nres, 0.0);
            a.sumsq.assign(nres, 0.0);
        }

        std::vector<std::size_t> slice_axes;
        for (std::size_t a = 0; a < dims; ++a)
            if (!grid.axes[a].active()) slice_axes.push_back(a);

        const std::size_t nw = grid.axes[window].count;
        fill_slice(0, ring[0]);
        fill_slice(1, ring[1]);
        for (std::size_t iw = 1; iw + 1 < nw; ++iw) {
            std::vector<double>& prev = ring[(iw - 1) % 3];
            std::vector<double>& cur = ring[iw % 3];
            std::vector<double>& next = ring[(iw + 1) % 3];
            fill_slice(iw + 1, next);

            parallel_for(slice_size, [&](std::size_t b, std::size_t e, std::size_t w) {
                NodeStencil st;
                st.h_ = h;
                st.plus_.assign(dims, nullptr);
                st.minus_.assign(dims, nullptr);
                std::vector<double> extra(2 * slice_axes.size() * ncomp);
                std::vector<double> shifted;
                std::vector<double> out(nres);
                Acc& A = acc[w];
                for (std::size_t o = b; o < e; ++o) {
                    if (!interior(o)) continue;
                    node_coords(iw, o, st.coords_);
                    if (!inside_box(st.coords_)) continue;
                    if (exclude && (*exclude)(std::span<const double>(st.coords_))) {
                        ++A.excluded;
                        continue;
                    }
                    st.center_ = cur.data() + o * ncomp;
                    st.plus_[window] = next.data() + o * ncomp;
                    st.minus_[window] = prev.data() + o * ncomp;
                    for (std::size_t a = 0; a < dims; ++a) {
                        if (a == window || !grid.axes[a].active()) continue;
                        st.plus_[a] = cur.data() + (o + stride[a]) * ncomp;
                        st.minus_[a] = cur.data() + (o - stride[a]) * ncomp;
                    }
                    for (std::size_t s = 0; s < slice_axes.size(); ++s) {
                        const std::size_t a = slice_axes[s];
                        for (int sign : {1, -1}) {
                            shifted = st.coords_;
                            shifted[a] += sign * h[a];
                            double* dst = extra.data() + (2 * s + (sign > 0 ? 0 : 1)) * ncomp;
                            field(std::span<const double>(shifted), std::span<double>(dst, ncomp));
                        }
                        st.plus_[a] = extra.data() + (2 * s) * ncomp;
                        st.minus_[a] = extra.data() + (2 * s + 1) * ncomp;
                    }
                    std::fill(out.begin(), out.end(), 0.0);
                    residual(st, std::span<double>(out));
                    for (std::size_t r = 0; r < nres; ++r) {
                        const double v = std::abs(out[r]);
                        A.max[r] = std::max(A.max[r], v);
                        A.sumsq[r] += v * v;
                    }
                    ++A.nodes;
                }
            });
        }

        SweepResult res;
        res.norms.assign(nres, NormPair{});
        std::vector<double> sumsq(nres, 0.0);
        for (const auto& a : acc) {
            res.nodes += a.nodes;
            res.excluded += a.excluded;
            for (std::size_t r = 0; r < nres; ++r) {
                res.norms[r].max_norm = std::max(res.norms[r].max_norm, a.max[r]);
                sumsq[r] += a.sumsq[r];
            }
        }
        for (std::size_t r = 0; r < nres; ++r)
            res.norms[r].l2_norm = res.nodes ? std::sqrt(sumsq[r] / static_cast<double>(res.nodes)) : 0.0;
        return res;
    }
};

template <class Field, class Residual>
SweepResult sweep_residual(const GridSpec& grid, std::size_t ncomp, const Field& field, std::size_t nres,
                           const Residual& residual)
{
    using NoExclude = std::function<bool(std::span<const double>)>;
    return SweepEngine<Field, Residual, NoExclude>{grid, ncomp, nres, field, residual, nullptr}.run();
}

template <class Field, class Residual, class Exclude>
SweepResult sweep_residual(const GridSpec& grid, std::size_t ncomp, const Field& field, std::size_t nres,
                           const Residual& residual, const Exclude& exclude,
                           const std::vector<std::pair<double, double>>* window_box = nullptr)
{
    return SweepEngine<Field, Residual, Exclude>{grid, ncomp, nres, field, residual, &exclude, window_box}.run();
}

// Bounding box of the interior nodes of `grid` (slice axes collapse to their coordinate).
inline std::vector<std::pair<double, double>> interior_box(const GridSpec& grid)
{
    std::vector<std::pair<double, double>> box;
    for (const auto& a : grid.axes) {
        if (a.active())
            box.emplace_back(a.coord(1), a.coord(a.count - 2));
        else
            box.emplace_back(a.min, a.min);
    }
    return box;
}

struct EquationResidual {
    std::string name;
    NormPair coarse;
    std::optional<NormPair> fine;
    std::optional<double> order;
};

// Residual norms on one grid, or on a grid and its refinement. The order
// estimate is log2(coarse max / fine max) and exists only for two resolutions.
struct ResidualReport {
    std::vector<EquationResidual> equations;
    GridSpec grid;
    std::optional<GridSpec> refined_grid;
    double max_norm = 0.0; // on the finest grid run
    double l2_norm = 0.0;
    double coarse_max_norm = 0.0;
    std::optional<double> order_estimate;
    std::size_t nodes = 0;
    std::size_t excluded_nodes = 0;

    // True when the finest residual sits below `floor`, or when it shrinks at
    // least at `min_order` under refinement.
    bool converged(double min_order, double floor) const
    {
        if (max_norm <= floor) return true;
        return order_estimate && *order_estimate >= min_order;
    }
};

inline std::optional<double> order_from(double coarse, double fine)
{
    if (!(coarse > 0.0) || !(fine > 0.0)) return std::nullopt;
    return std::log2(coarse / fine);
}

struct ResidualOptions {
    bool two_resolutions = true;
};

// Returns true for grid nodes to leave out of the residual norms.
using NodeFilter = std::function<bool(std::span<const double>)>;

template <class Field, class Residual, class Exclude>
ResidualReport residual_report(const GridSpec& grid, const std::vector<std::string>& names, std::size_t ncomp,
                               const Field& field, const Residual& residual, const Exclude& exclude,
                               const ResidualOptions& opts = {})
{
    ResidualReport rep;
    rep.grid = grid;
    const SweepResult coarse = sweep_residual(grid, ncomp, field, names.size(), residual, exclude);
    rep.equations.resize(names.size());
    for (std::size_t r = 0; r < names.size(); ++r) {
        rep.equations[r].name = names[r];
        rep.equations[r].coarse = coarse.norms[r];
        rep.coarse_max_norm = std::max(rep.coarse_max_norm, coarse.norms[r].max_norm);
    }
    const SweepResult* finest = &coarse;
    SweepResult fine;
    if (opts.two_resolutions) {
        // the refined norm covers the same region as the coarse one
        rep.refined_grid = grid.refined();
        const auto box = interior_box(grid);
        fine = sweep_residual(*rep.refined_grid, ncomp, field, names.size(), residual, exclude, &box);
        finest = &fine;
        double fine_max = 0.0;
        for (std::size_t r = 0; r < names.size(); ++r) {
            rep.equations[r].fine = fine.norms[r];
            rep.equations[r].order = order_from(coarse.norms[r].max_norm, fine.norms[r].max_norm);
            fine_max = std::max(fine_max, fine.norms[r].max_norm);
        }
        rep.order_estimate = order_from(rep.coarse_max_norm, fine_max);
    }
    double sumsq = 0.0;
    for (const auto& n : finest->norms) {
        rep.max_norm = std::max(rep.max_norm, n.max_norm);
        sumsq += n.l2_norm * n.l2_norm;
    }
    rep.l2_norm = std::sqrt(sumsq);
    rep.nodes = finest->nodes;
    rep.excluded_nodes = finest->excluded;
    return rep;
}

template <class Field, class Residual>
ResidualReport residual_report(const GridSpec& grid, const std::vector<std::string>& names, std::size_t ncomp,
                               const Field& field, const Residual& residual, const ResidualOptions& opts = {})
{
    const std::function<bool(std::span<const double>)> none = [](std::span<const double>) { return false; };
    return residual_report(grid, names, ncomp, field, residual, none, opts);
}

} // namespace covforge
