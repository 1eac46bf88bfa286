#pragma once

#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsa/errors.hpp"

namespace qsa {

using cx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// A basis ket is a tuple of small integer symbols, split into named register
// slots of fixed width. Bases list only the labels a computation can reach,
// not the full label product, so dimensions stay below the configured cap.
using Label = std::vector<int>;

class LabeledBasis {
public:
    LabeledBasis() = default;
    LabeledBasis(std::vector<std::string> register_names,
                 std::vector<int> register_widths,
                 std::vector<Label> labels);

    // Convenience: one register holding width-1 labels {0..count-1}.
    static LabeledBasis range(const std::string& name, int count);
    // One register of the given width with explicit labels.
    static LabeledBasis of_labels(const std::string& name, int width,
                                  std::vector<Label> labels);

    int dim() const { return static_cast<int>(labels_.size()); }
    int label_width() const { return total_width_; }
    const std::vector<Label>& labels() const { return labels_; }
    const Label& label(int i) const { return labels_[i]; }
    const std::vector<std::string>& register_names() const { return names_; }
    const std::vector<int>& register_widths() const { return widths_; }

    // Position of a label, or -1.
    int find(const Label& l) const;
    // Position of a label; throws if absent.
    int require(const Label& l) const;

    bool has_register(const std::string& name) const;
    // [offset, width) of a register slot inside each label.
    std::pair<int, int> register_span(const std::string& name) const;

    bool same_layout(const LabeledBasis& other) const;
    bool operator==(const LabeledBasis& other) const;

private:
    std::vector<std::string> names_;
    std::vector<int> widths_;
    std::vector<Label> labels_;
    std::map<Label, int> index_;
    int total_width_ = 0;
};

// Normalized pure state over a labeled basis.
struct StateVector {
    LabeledBasis basis;
    Vec amplitudes;

    StateVector() = default;
    StateVector(LabeledBasis b, Vec a);

    double norm() const { return amplitudes.norm(); }
    void require_normalized(double tol = default_tolerance) const;
};

// Hermitian, PSD, trace-one operator over a labeled basis.
struct DensityOperator {
    LabeledBasis basis;
    Mat matrix;

    DensityOperator() = default;
    DensityOperator(LabeledBasis b, Mat m);

    // Asserts Hermiticity, unit trace and positivity within tol.
    void require_valid(double tol = default_tolerance) const;
};

struct UnitaryOperator {
    LabeledBasis basis_in;
    LabeledBasis basis_out;
    Mat matrix;

    void require_unitary(double tol = default_tolerance) const;
};

// |psi><psi|
DensityOperator pure_density(const StateVector& psi);

// Weighted mixture sum_i w_i |psi_i><psi_i| over a common basis.
DensityOperator mix(const LabeledBasis& basis,
                    const std::vector<std::pair<double, Vec>>& terms);

// Kronecker product of states; the result basis is the Cartesian product of
// labels. Register names must be disjoint. Throws budget_error past max_dim.
StateVector tensor(const StateVector& u, const StateVector& v,
                   int max_dim = max_state_dimension());

// Trace out every register not named in `keep`. Kept labels appear in their
// order of first occurrence in the source basis, which keeps the ordering
// stable across a run.
DensityOperator partial_trace(const DensityOperator& rho,
                              const std::vector<std::string>& keep);

// Sum of singular values. For Hermitian input this is the sum of absolute
// eigenvalues; detection is automatic. Throws on decomposition failure.
double trace_norm(const Mat& m);

// Embeds both operators in the union of their bases (matched by label) and
// returns |a - b| in trace norm.
double trace_norm_difference(const DensityOperator& a, const DensityOperator& b);

// Optimal equal-prior discrimination probability between two states on the
// same basis: 1/2 + |rho0 - rho1|_tr / 4.
double helstrom_p_guess(const DensityOperator& rho0, const DensityOperator& rho1);

struct AlignedUnitary {
    Mat unitary;
    bool unique = true;       // false when rank deficiency leaves freedom
    double min_singular = 0;  // smallest singular value of B^dagger C
};

// The unitary minimizing ||B U - C||_F, via the singular decomposition of
// B^dagger C. Columns of B and C stack constraints; caller must verify
// exactness of whatever equalities it wanted.
AlignedUnitary align_unitary(const Mat& b, const Mat& c);

// True when u and v agree up to a global phase.
bool equal_up_to_phase(const Mat& u, const Mat& v, double tol = default_tolerance);

// Componentwise modular sum of two symbol strings (bitwise xor when all
// moduli are 2).
Label add_symbols(const Label& a, const Label& b, const std::vector<int>& moduli);

// Reversible lift of a classical table: |x, a> -> |x, a (+) f(x)> where (+)
// is componentwise addition modulo response_moduli. The response register
// enumerates the full string space over the moduli. Result acts on
// input (x) tensor response, registers named after input_basis plus `resp`.
UnitaryOperator lift_classical_function(
    const LabeledBasis& input_basis,
    const std::vector<int>& response_moduli,
    const std::function<Label(const Label&)>& f,
    int max_dim = max_state_dimension());

// All strings over the given per-position moduli, in lexicographic order.
std::vector<Label> enumerate_strings(const std::vector<int>& moduli,
                                     int max_count = max_state_dimension());

}  // namespace qsa
