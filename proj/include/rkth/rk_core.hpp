#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rkth {

using Vec2 = Eigen::Vector2d;

/// Cubic B-spline kernel with compact support, normalized so w(0) = 2/3.
/// The argument is the normalized distance s = |x - x_I| / a_I.
double cubic_bspline(double s);
double cubic_bspline_deriv(double s);
/// w'(s)/s, finite in the s -> 0 limit (used for kernel gradients).
double cubic_bspline_dratio(double s);

/// Monomial basis of order 1 in (r, z), optionally enriched with log(r/r_I).
struct BasisSpec {
    int order = 1;
    bool enriched = false;
    /// Evaluation points with r beyond this radius drop the log column.
    double enrich_cutoff_r = std::numeric_limits<double>::infinity();

    bool enriched_at(double r) const { return enriched && r <= enrich_cutoff_r; }
    int size_at(double r) const { return enriched_at(r) ? 4 : 3; }
    int size() const { return enriched ? 4 : 3; }
};

/// Node positions in the (r, z) half-plane with per-node circular supports.
/// Nodes flagged singular use the kernel w(s)/s^2, which makes their shape
/// function interpolating at the node center (boundary Dirichlet treatment).
struct NodeCloud {
    std::vector<Vec2> x;
    std::vector<double> support;
    std::vector<char> singular;

    int size() const { return static_cast<int>(x.size()); }
    void validate() const;

    /// Ids of nodes whose kernel support strictly contains the point.
    std::vector<int> covering_nodes(const Vec2& p) const;
    void build_index();

  private:
    // uniform bins over the bounding box, edge length = max support
    double bin_size_ = 0.0;
    double r0_ = 0.0, z0_ = 0.0;
    int nbr_ = 0, nbz_ = 0;
    std::vector<std::vector<int>> bins_;
    bool indexed_ = false;
};

/// Shape-function values (and optional direct gradients) of every node
/// influencing one evaluation point. Nodes outside their kernel support are
/// excluded, so their value is exactly zero by construction.
struct RKShapeSet {
    Vec2 point;
    std::vector<int> nodes;
    Eigen::VectorXd value;
    Eigen::Matrix<double, Eigen::Dynamic, 2> grad;  // columns: d/dr, d/dz
    bool has_grad = false;
};

struct SingularMomentError : std::runtime_error {
    double condition;
    int covering;
    SingularMomentError(double cond, int cov)
        : std::runtime_error("singular moment matrix: condition estimate " +
                             std::to_string(cond) + ", covering nodes " + std::to_string(cov)),
          condition(cond), covering(cov) {}
};

/// Basis vector H(x - x_I): [1, dr, dz] and, when enriched, log(r/r_I).
Eigen::VectorXd build_basis(double dr, double dz, double r, double r_I, const BasisSpec& spec);

/// RK shape functions at a point: Psi_I = H(0)^T M^{-1} H(x - x_I) w_a(x - x_I).
/// Throws SingularMomentError when the moment matrix is not safely invertible.
RKShapeSet shape_functions(const Vec2& pt, const NodeCloud& cloud, const BasisSpec& spec,
                           bool with_grad = false);

/// Max componentwise residual of the discrete reproducing conditions at a point.
double verify_reproduction(const Vec2& pt, const NodeCloud& cloud, const BasisSpec& spec);

}  // namespace rkth
