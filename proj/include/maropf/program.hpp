#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace maropf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Term {
    int var = 0;
    double coef = 0.0;
};

struct AffineExpr {
    std::vector<Term> terms;
    double constant = 0.0;

    AffineExpr() = default;
    explicit AffineExpr(double c) : constant(c) {}
    static AffineExpr of(int var, double coef = 1.0) {
        AffineExpr e;
        e.terms.push_back({var, coef});
        return e;
    }
    AffineExpr& add(int var, double coef) {
        if (coef != 0.0) terms.push_back({var, coef});
        return *this;
    }
    AffineExpr& add(const AffineExpr& e, double scale = 1.0) {
        for (const Term& t : e.terms) add(t.var, scale * t.coef);
        constant += scale * e.constant;
        return *this;
    }
    AffineExpr& add_constant(double c) {
        constant += c;
        return *this;
    }
    double eval(const Eigen::VectorXd& x) const;
    // Merge repeated variables, drop zeros, sort by variable id.
    void canonicalize();
};

enum class Sense { Le, Eq, Ge };

struct LinearRow {
    std::vector<Term> terms;
    Sense sense = Sense::Eq;
    double rhs = 0.0;
    std::string tag;
};

// ||u||^2 <= a * b with a, b >= 0.
struct RotatedCone {
    AffineExpr a;
    AffineExpr b;
    std::vector<AffineExpr> u;
    std::string tag;
};

struct Variable {
    std::string name;
    double lo = -kInf;
    double hi = kInf;
    bool binary = false;
};

class ConicProgram {
public:
    int add_variable(std::string name, double lo = -kInf, double hi = kInf, bool binary = false);
    int add_binary(std::string name) { return add_variable(std::move(name), 0.0, 1.0, true); }
    int add_row(const AffineExpr& lhs, Sense sense, double rhs, std::string tag);
    int add_cone(RotatedCone cone);
    void set_objective(AffineExpr objective);

    int num_variables() const { return static_cast<int>(vars_.size()); }
    int num_rows() const { return static_cast<int>(rows_.size()); }
    int num_cones() const { return static_cast<int>(cones_.size()); }
    int num_binaries() const;

    const std::vector<Variable>& variables() const { return vars_; }
    std::vector<Variable>& variables() { return vars_; }
    const std::vector<LinearRow>& rows() const { return rows_; }
    const std::vector<RotatedCone>& cones() const { return cones_; }
    std::vector<RotatedCone>& cones() { return cones_; }
    const AffineExpr& objective() const { return objective_; }
    AffineExpr& objective() { return objective_; }

    void set_bounds(int var, double lo, double hi);

    // Empty when well formed.
    std::vector<std::string> validate() const;
    // Pairs (first, duplicate) of identical rows.
    std::vector<std::pair<int, int>> duplicate_rows() const;

    double objective_value(const Eigen::VectorXd& x) const { return objective_.eval(x); }
    double max_row_violation(const Eigen::VectorXd& x) const;
    double max_bound_violation(const Eigen::VectorXd& x) const;
    double max_cone_violation(const Eigen::VectorXd& x) const;

    void dump(std::ostream& out) const;

private:
    std::vector<Variable> vars_;
    std::vector<LinearRow> rows_;
    std::vector<RotatedCone> cones_;
    AffineExpr objective_;
};

}  // namespace maropf
