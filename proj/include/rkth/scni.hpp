#pragma once

#include <array>
#include <vector>

#include "rkth/rk_core.hpp"

namespace rkth {

struct CellEdge {
    Vec2 a, b;       // endpoints, CCW order
    Vec2 normal;     // unit outward
    double length;
};

/// Conforming rectangular smoothing cell. W_L is the plain (r, z)-plane area;
/// the centroid radius carries the axisymmetric weighting separately.
struct SmoothingCell {
    int id = 0;
    std::array<Vec2, 4> verts;   // CCW from (r_lo, z_lo)
    Vec2 centroid;
    double area = 0.0;
    std::array<CellEdge, 4> edges;  // bottom, right, top, left
};

struct CellPartition {
    int nr = 0, nz = 0;
    std::vector<double> r_edges, z_edges;
    std::vector<SmoothingCell> cells;  // row-major, id = j * nr + i

    double domain_area() const;
    const SmoothingCell& cell(int i, int j) const { return cells[static_cast<size_t>(j) * nr + i]; }
};

/// Structured conforming partition of [r0,r1] x [z0,z1] into nr x nz cells.
/// grading_r > 1 makes radial widths a geometric sequence growing outward,
/// i.e. the partition is refined toward the inner radius.
CellPartition build_rect_partition(double r0, double r1, double z0, double z1, int nr, int nz,
                                   double grading_r = 1.0);

/// One node per cell at its centroid. snap_left moves the first node column
/// onto r = r0 (heater surface placement); singular_left additionally flags
/// those nodes for the singular-kernel Dirichlet treatment.
NodeCloud cloud_from_partition(const CellPartition& part, double support_factor = 2.6,
                               bool snap_left = false, bool singular_left = false);

/// Per-cell smoothed shape data over the union of nodes influencing the cell.
struct CellShapes {
    std::vector<int> nodes;
    Eigen::VectorXd value;          // Psi_I at the cell centroid
    Eigen::VectorXd cell_integral;  // 2x2 Gauss integral of Psi_I over the cell
    Eigen::Matrix<double, Eigen::Dynamic, 2> grad;  // smoothed gradient rows
};

/// Cartesian SCNI: grad = (1/W_L) * boundary integral of Psi n dGamma.
CellShapes smoothed_grad_cartesian(const SmoothingCell& cell, const NodeCloud& cloud,
                                   const BasisSpec& spec, int edge_gauss = 2);

/// Axisymmetric SCNI: the r component subtracts the cell integral of Psi and
/// both components carry the r-weighted boundary measure and 1/(r_L W_L).
CellShapes smoothed_grad_axisym(const SmoothingCell& cell, const NodeCloud& cloud,
                                const BasisSpec& spec, int edge_gauss = 2);

enum class SmoothingScheme { Axisymmetric, Cartesian };

struct PatchTestResult {
    double max_err = 0.0;                 // max strain deviation over cells/components
    Eigen::Vector4d max_err_by_comp;      // eps_rr, eps_zz, eps_theta, eps_rz
    double max_disp_err = 0.0;            // field value deviation at centroids
};

/// Axisymmetric linear patch test, u_r = 0.1 r and u_z = 0.2 z.
/// With solve = false the manufactured field is imposed at every node and the
/// smoothed strains are evaluated directly. With solve = true the boundary
/// band of nodes is constrained and the interior is solved from the
/// axisymmetric elastic Galerkin system built with the requested scheme,
/// which is the configuration that exposes the unmodified scheme's
/// integration inconsistency.
PatchTestResult patch_test(const CellPartition& part, const NodeCloud& cloud,
                           const BasisSpec& spec, SmoothingScheme scheme, bool solve = true,
                           int edge_gauss = 2);

/// Gauss-Legendre points/weights on [-1, 1], n in [1, 4].
const std::vector<std::pair<double, double>>& gauss_rule(int n);

}  // namespace rkth
