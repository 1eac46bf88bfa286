#include "qsa/linalg.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace qsa {

int max_state_dimension() {
    static const int cap = [] {
        if (const char* env = std::getenv("QSA_MAX_DIM")) {
            int v = std::atoi(env);
            if (v > 0) return v;
        }
        return 4096;
    }();
    return cap;
}

namespace {

std::string label_to_string(const Label& l) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < l.size(); ++i) os << (i ? "," : "") << l[i];
    os << ")";
    return os.str();
}

}  // namespace

LabeledBasis::LabeledBasis(std::vector<std::string> register_names,
                           std::vector<int> register_widths,
                           std::vector<Label> labels)
    : names_(std::move(register_names)),
      widths_(std::move(register_widths)),
      labels_(std::move(labels)) {
    if (names_.size() != widths_.size())
        throw std::invalid_argument("basis: register name/width count mismatch");
    total_width_ = std::accumulate(widths_.begin(), widths_.end(), 0);
    for (int i = 0; i < static_cast<int>(labels_.size()); ++i) {
        if (static_cast<int>(labels_[i].size()) != total_width_)
            throw std::invalid_argument("basis: label " + label_to_string(labels_[i]) +
                                        " has wrong width");
        if (!index_.emplace(labels_[i], i).second)
            throw std::invalid_argument("basis: duplicate label " +
                                        label_to_string(labels_[i]));
    }
}

LabeledBasis LabeledBasis::range(const std::string& name, int count) {
    std::vector<Label> labels;
    labels.reserve(count);
    for (int i = 0; i < count; ++i) labels.push_back({i});
    return LabeledBasis({name}, {1}, std::move(labels));
}

LabeledBasis LabeledBasis::of_labels(const std::string& name, int width,
                                     std::vector<Label> labels) {
    return LabeledBasis({name}, {width}, std::move(labels));
}

int LabeledBasis::find(const Label& l) const {
    auto it = index_.find(l);
    return it == index_.end() ? -1 : it->second;
}

int LabeledBasis::require(const Label& l) const {
    int i = find(l);
    if (i < 0)
        throw std::invalid_argument("basis: label " + label_to_string(l) + " not present");
    return i;
}

bool LabeledBasis::has_register(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::pair<int, int> LabeledBasis::register_span(const std::string& name) const {
    int offset = 0;
    for (size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return {offset, widths_[i]};
        offset += widths_[i];
    }
    throw std::invalid_argument("basis: unknown register '" + name + "'");
}

bool LabeledBasis::same_layout(const LabeledBasis& other) const {
    return names_ == other.names_ && widths_ == other.widths_;
}

bool LabeledBasis::operator==(const LabeledBasis& other) const {
    return same_layout(other) && labels_ == other.labels_;
}

StateVector::StateVector(LabeledBasis b, Vec a)
    : basis(std::move(b)), amplitudes(std::move(a)) {
    if (amplitudes.size() != basis.dim())
        throw std::invalid_argument("state: amplitude count does not match basis");
    if (!amplitudes.allFinite())
        throw std::invalid_argument("state: non-finite amplitude");
}

void StateVector::require_normalized(double tol) const {
    double n = amplitudes.norm();
    if (std::abs(n - 1.0) > tol)
        throw std::invalid_argument("state: norm " + std::to_string(n) + " is not 1");
}

DensityOperator::DensityOperator(LabeledBasis b, Mat m)
    : basis(std::move(b)), matrix(std::move(m)) {
    if (matrix.rows() != basis.dim() || matrix.cols() != basis.dim())
        throw std::invalid_argument("density: matrix does not match basis dimension");
}

void DensityOperator::require_valid(double tol) const {
    if (!matrix.allFinite())
        throw std::invalid_argument("density: non-finite entry");
    double herm = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol)
        throw std::invalid_argument("density: not Hermitian, defect " + std::to_string(herm));
    double tr = std::abs(matrix.trace() - cx(1.0, 0.0));
    if (tr > tol)
        throw std::invalid_argument("density: trace defect " + std::to_string(tr));
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (matrix + matrix.adjoint()),
                                          Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("density: eigenvalue decomposition did not converge");
    double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -tol)
        throw std::invalid_argument("density: negative eigenvalue " + std::to_string(min_eig));
}

void UnitaryOperator::require_unitary(double tol) const {
    if (basis_in.dim() != basis_out.dim())
        throw std::invalid_argument("unitary: input/output dimension mismatch");
    Mat gram = matrix.adjoint() * matrix;
    double defect = (gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (defect > tol)
        throw std::invalid_argument("unitary: U^dagger U deviates from identity by " +
                                    std::to_string(defect));
}

DensityOperator pure_density(const StateVector& psi) {
    return DensityOperator(psi.basis, psi.amplitudes * psi.amplitudes.adjoint());
}

DensityOperator mix(const LabeledBasis& basis,
                    const std::vector<std::pair<double, Vec>>& terms) {
    Mat rho = Mat::Zero(basis.dim(), basis.dim());
    for (const auto& [w, v] : terms) {
        if (v.size() != basis.dim())
            throw std::invalid_argument("mix: component dimension mismatch");
        rho += w * (v * v.adjoint());
    }
    return DensityOperator(basis, std::move(rho));
}

StateVector tensor(const StateVector& u, const StateVector& v, int max_dim) {
    for (const auto& name : u.basis.register_names())
        if (v.basis.has_register(name))
            throw std::invalid_argument("tensor: register '" + name + "' on both factors");
    long long dim = static_cast<long long>(u.basis.dim()) * v.basis.dim();
    if (dim > max_dim)
        throw budget_error("tensor: dimension " + std::to_string(dim) +
                           " exceeds cap " + std::to_string(max_dim));

    std::vector<std::string> names = u.basis.register_names();
    names.insert(names.end(), v.basis.register_names().begin(),
                 v.basis.register_names().end());
    std::vector<int> widths = u.basis.register_widths();
    widths.insert(widths.end(), v.basis.register_widths().begin(),
                  v.basis.register_widths().end());

    std::vector<Label> labels;
    labels.reserve(dim);
    Vec amps(dim);
    int k = 0;
    for (int i = 0; i < u.basis.dim(); ++i) {
        for (int j = 0; j < v.basis.dim(); ++j, ++k) {
            Label l = u.basis.label(i);
            const Label& r = v.basis.label(j);
            l.insert(l.end(), r.begin(), r.end());
            labels.push_back(std::move(l));
            amps[k] = u.amplitudes[i] * v.amplitudes[j];
        }
    }
    return StateVector(LabeledBasis(std::move(names), std::move(widths), std::move(labels)),
                       std::move(amps));
}

DensityOperator partial_trace(const DensityOperator& rho,
                              const std::vector<std::string>& keep) {
    const LabeledBasis& b = rho.basis;
    std::vector<std::pair<int, int>> keep_spans, drop_spans;
    std::vector<std::string> keep_names;
    std::vector<int> keep_widths;
    std::set<std::string> keep_set(keep.begin(), keep.end());
    for (const auto& name : keep)
        if (!b.has_register(name))
            throw std::invalid_argument("partial_trace: unknown subsystem '" + name + "'");
    for (size_t i = 0; i < b.register_names().size(); ++i) {
        auto span = b.register_span(b.register_names()[i]);
        if (keep_set.count(b.register_names()[i])) {
            keep_spans.push_back(span);
            keep_names.push_back(b.register_names()[i]);
            keep_widths.push_back(b.register_widths()[i]);
        } else {
            drop_spans.push_back(span);
        }
    }

    auto slice = [](const Label& l, const std::vector<std::pair<int, int>>& spans) {
        Label out;
        for (auto [off, w] : spans)
            out.insert(out.end(), l.begin() + off, l.begin() + off + w);
        return out;
    };

    // Kept labels in order of first occurrence.
    std::vector<Label> kept_labels;
    std::map<Label, int> kept_index;
    std::vector<int> kept_of(b.dim());
    std::vector<Label> dropped_of(b.dim());
    for (int i = 0; i < b.dim(); ++i) {
        Label kl = slice(b.label(i), keep_spans);
        auto [it, fresh] = kept_index.emplace(kl, static_cast<int>(kept_labels.size()));
        if (fresh) kept_labels.push_back(kl);
        kept_of[i] = it->second;
        dropped_of[i] = slice(b.label(i), drop_spans);
    }

    Mat out = Mat::Zero(kept_labels.size(), kept_labels.size());
    for (int i = 0; i < b.dim(); ++i)
        for (int j = 0; j < b.dim(); ++j)
            if (dropped_of[i] == dropped_of[j]) out(kept_of[i], kept_of[j]) += rho.matrix(i, j);

    return DensityOperator(
        LabeledBasis(std::move(keep_names), std::move(keep_widths), std::move(kept_labels)),
        std::move(out));
}

double trace_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    if (!m.allFinite()) throw std::invalid_argument("trace_norm: non-finite entry");
    if (m.rows() == m.cols()) {
        double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
        if (herm <= 1e-12 * scale) {
            Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.adjoint()),
                                                  Eigen::EigenvaluesOnly);
            if (es.info() != Eigen::Success)
                throw std::runtime_error("trace_norm: eigensolver did not converge");
            return es.eigenvalues().cwiseAbs().sum();
        }
    }
    Eigen::BDCSVD<Mat> svd(m);
    if (svd.info() != Eigen::Success)
        throw std::runtime_error("trace_norm: singular value decomposition did not converge");
    return svd.singularValues().sum();
}

double trace_norm_difference(const DensityOperator& a, const DensityOperator& b) {
    if (a.basis == b.basis) return trace_norm(a.matrix - b.matrix);
    if (!a.basis.same_layout(b.basis))
        throw std::invalid_argument("trace_norm_difference: register layouts differ");

    // Union basis, a's labels first.
    std::vector<Label> labels = a.basis.labels();
    std::map<Label, int> index;
    for (int i = 0; i < a.basis.dim(); ++i) index[labels[i]] = i;
    for (const auto& l : b.basis.labels())
        if (!index.count(l)) {
            index[l] = static_cast<int>(labels.size());
            labels.push_back(l);
        }
    int dim = static_cast<int>(labels.size());
    Mat diff = Mat::Zero(dim, dim);
    for (int i = 0; i < a.basis.dim(); ++i)
        for (int j = 0; j < a.basis.dim(); ++j)
            diff(index.at(a.basis.label(i)), index.at(a.basis.label(j))) += a.matrix(i, j);
    for (int i = 0; i < b.basis.dim(); ++i)
        for (int j = 0; j < b.basis.dim(); ++j)
            diff(index.at(b.basis.label(i)), index.at(b.basis.label(j))) -= b.matrix(i, j);
    return trace_norm(diff);
}

double helstrom_p_guess(const DensityOperator& rho0, const DensityOperator& rho1) {
    if (!(rho0.basis == rho1.basis))
        throw std::invalid_argument("helstrom_p_guess: states live on different bases");
    return 0.5 + 0.25 * trace_norm(rho0.matrix - rho1.matrix);
}

AlignedUnitary align_unitary(const Mat& b, const Mat& c) {
    if (b.rows() != c.rows() || b.cols() != c.cols())
        throw std::invalid_argument("align_unitary: shape mismatch");
    Mat target = b.adjoint() * c;
    Eigen::JacobiSVD<Mat> svd(target, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success)
        throw std::runtime_error("align_unitary: decomposition did not converge");
    AlignedUnitary out;
    out.unitary = svd.matrixU() * svd.matrixV().adjoint();
    const auto& sv = svd.singularValues();
    out.min_singular = sv.size() ? sv.minCoeff() : 0.0;
    double top = sv.size() ? sv.maxCoeff() : 0.0;
    out.unique = out.min_singular > 1e-9 * std::max(1.0, top);
    return out;
}

bool equal_up_to_phase(const Mat& u, const Mat& v, double tol) {
    if (u.rows() != v.rows() || u.cols() != v.cols()) return false;
    // Phase from the largest entry of u.
    int r = 0, c = 0;
    double best = -1;
    for (int i = 0; i < u.rows(); ++i)
        for (int j = 0; j < u.cols(); ++j)
            if (std::abs(u(i, j)) > best) best = std::abs(u(i, j)), r = i, c = j;
    if (best <= tol) return v.cwiseAbs().maxCoeff() <= tol;
    if (std::abs(v(r, c)) <= tol) return false;
    cx phase = v(r, c) / u(r, c);
    phase /= std::abs(phase);
    return ((u * phase) - v).cwiseAbs().maxCoeff() <= tol;
}

Label add_symbols(const Label& a, const Label& b, const std::vector<int>& moduli) {
    if (a.size() != b.size() || a.size() != moduli.size())
        throw std::invalid_argument("add_symbols: width mismatch");
    Label out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = (a[i] + b[i]) % moduli[i];
    return out;
}

std::vector<Label> enumerate_strings(const std::vector<int>& moduli, int max_count) {
    long long total = 1;
    for (int m : moduli) {
        if (m < 1) throw std::invalid_argument("enumerate_strings: modulus < 1");
        total *= m;
        if (total > max_count)
            throw budget_error("enumerate_strings: space exceeds cap " +
                               std::to_string(max_count));
    }
    std::vector<Label> out;
    out.reserve(total);
    Label cur(moduli.size(), 0);
    for (long long i = 0; i < total; ++i) {
        out.push_back(cur);
        for (int pos = static_cast<int>(moduli.size()) - 1; pos >= 0; --pos) {
            if (++cur[pos] < moduli[pos]) break;
            cur[pos] = 0;
        }
    }
    return out;
}

UnitaryOperator lift_classical_function(
    const LabeledBasis& input_basis, const std::vector<int>& response_moduli,
    const std::function<Label(const Label&)>& f, int max_dim) {
    std::vector<Label> responses = enumerate_strings(response_moduli, max_dim);
    long long dim = static_cast<long long>(input_basis.dim()) * responses.size();
    if (dim > max_dim)
        throw budget_error("lift_classical_function: dimension " + std::to_string(dim) +
                           " exceeds cap");

    std::map<Label, int> response_index;
    for (int i = 0; i < static_cast<int>(responses.size()); ++i)
        response_index[responses[i]] = i;

    std::vector<std::string> names = input_basis.register_names();
    names.push_back("resp");
    std::vector<int> widths = input_basis.register_widths();
    widths.push_back(static_cast<int>(response_moduli.size()));
    std::vector<Label> labels;
    labels.reserve(dim);
    for (int i = 0; i < input_basis.dim(); ++i)
        for (const auto& r : responses) {
            Label l = input_basis.label(i);
            l.insert(l.end(), r.begin(), r.end());
            labels.push_back(std::move(l));
        }
    LabeledBasis basis(std::move(names), std::move(widths), std::move(labels));

    int nr = static_cast<int>(responses.size());
    Mat m = Mat::Zero(basis.dim(), basis.dim());
    for (int i = 0; i < input_basis.dim(); ++i) {
        Label fx = f(input_basis.label(i));
        if (fx.size() != response_moduli.size())
            throw std::invalid_argument("lift_classical_function: value width mismatch");
        for (size_t p = 0; p < fx.size(); ++p)
            if (fx[p] < 0 || fx[p] >= response_moduli[p])
                throw std::invalid_argument(
                    "lift_classical_function: value outside response alphabet");
        for (int a = 0; a < nr; ++a) {
            int target = response_index.at(add_symbols(responses[a], fx, response_moduli));
            m(i * nr + target, i * nr + a) = 1.0;
        }
    }
    UnitaryOperator u{basis, basis, std::move(m)};
    u.require_unitary();
    return u;
}

}  // namespace qsa
