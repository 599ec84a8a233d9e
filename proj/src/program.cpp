#include "maropf/program.hpp"

#include "maropf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace maropf {

double AffineExpr::eval(const Eigen::VectorXd& x) const {
    double s = constant;
    for (const Term& t : terms) s += t.coef * x(t.var);
    return s;
}

void AffineExpr::canonicalize() {
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
    std::vector<Term> merged;
    for (const Term& t : terms) {
        if (!merged.empty() && merged.back().var == t.var) merged.back().coef += t.coef;
        else merged.push_back(t);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(), [](const Term& t) { return t.coef == 0.0; }),
                 merged.end());
    terms = std::move(merged);
}

int ConicProgram::add_variable(std::string name, double lo, double hi, bool binary) {
    vars_.push_back({std::move(name), lo, hi, binary});
    return static_cast<int>(vars_.size()) - 1;
}

int ConicProgram::add_row(const AffineExpr& lhs, Sense sense, double rhs, std::string tag) {
    AffineExpr e = lhs;
    e.canonicalize();
    rows_.push_back({std::move(e.terms), sense, rhs - e.constant, std::move(tag)});
    return static_cast<int>(rows_.size()) - 1;
}

int ConicProgram::add_cone(RotatedCone cone) {
    cone.a.canonicalize();
    cone.b.canonicalize();
    for (AffineExpr& u : cone.u) u.canonicalize();
    cones_.push_back(std::move(cone));
    return static_cast<int>(cones_.size()) - 1;
}

void ConicProgram::set_objective(AffineExpr objective) {
    objective.canonicalize();
    objective_ = std::move(objective);
}

int ConicProgram::num_binaries() const {
    return static_cast<int>(std::count_if(vars_.begin(), vars_.end(), [](const Variable& v) { return v.binary; }));
}

void ConicProgram::set_bounds(int var, double lo, double hi) {
    vars_[static_cast<std::size_t>(var)].lo = lo;
    vars_[static_cast<std::size_t>(var)].hi = hi;
}

std::vector<std::string> ConicProgram::validate() const {
    std::vector<std::string> issues;
    const int n = num_variables();
    auto check_terms = [&](const std::vector<Term>& terms, const std::string& where) {
        for (const Term& t : terms) {
            if (t.var < 0 || t.var >= n) issues.push_back(where + " references unknown variable " + std::to_string(t.var));
            if (!std::isfinite(t.coef)) issues.push_back(where + " has a non-finite coefficient");
        }
    };
    for (int i = 0; i < n; ++i) {
        const Variable& v = vars_[static_cast<std::size_t>(i)];
        if (v.lo > v.hi) issues.push_back("variable " + v.name + " has lo > hi");
        if (v.binary && (v.lo < 0.0 || v.hi > 1.0)) issues.push_back("binary " + v.name + " has bounds outside [0,1]");
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        check_terms(rows_[r].terms, "row " + rows_[r].tag);
        if (!std::isfinite(rows_[r].rhs)) issues.push_back("row " + rows_[r].tag + " has a non-finite rhs");
    }
    auto nonneg_forced = [&](const AffineExpr& e) {
        if (e.terms.empty()) return e.constant >= 0.0;
        if (e.terms.size() != 1) return false;
        const Term& t = e.terms.front();
        if (t.var < 0 || t.var >= n) return false;
        const Variable& v = vars_[static_cast<std::size_t>(t.var)];
        double lo = t.coef > 0.0 ? t.coef * v.lo : t.coef * v.hi;
        return lo + e.constant >= 0.0;
    };
    for (const RotatedCone& c : cones_) {
        check_terms(c.a.terms, "cone " + c.tag);
        check_terms(c.b.terms, "cone " + c.tag);
        for (const AffineExpr& u : c.u) check_terms(u.terms, "cone " + c.tag);
        if (!nonneg_forced(c.a) || !nonneg_forced(c.b))
            issues.push_back("cone " + c.tag + " has a side not forced nonnegative by bounds");
    }
    check_terms(objective_.terms, "objective");
    for (auto [a, b] : duplicate_rows()) {
        issues.push_back("row " + rows_[static_cast<std::size_t>(b)].tag + " duplicates row " +
                         rows_[static_cast<std::size_t>(a)].tag);
    }
    return issues;
}

std::vector<std::pair<int, int>> ConicProgram::duplicate_rows() const {
    using Key = std::tuple<int, double, std::vector<std::pair<int, double>>>;
    std::map<Key, int> seen;
    std::vector<std::pair<int, int>> dups;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        const LinearRow& row = rows_[r];
        std::vector<std::pair<int, double>> t;
        t.reserve(row.terms.size());
        for (const Term& term : row.terms) t.emplace_back(term.var, term.coef);
        Key key{static_cast<int>(row.sense), row.rhs, std::move(t)};
        auto [it, inserted] = seen.emplace(std::move(key), static_cast<int>(r));
        if (!inserted) dups.emplace_back(it->second, static_cast<int>(r));
    }
    return dups;
}

double ConicProgram::max_row_violation(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (const LinearRow& row : rows_) {
        double a = 0.0;
        for (const Term& t : row.terms) a += t.coef * x(t.var);
        double viol = row.sense == Sense::Le ? a - row.rhs : row.sense == Sense::Ge ? row.rhs - a : std::abs(a - row.rhs);
        worst = std::max(worst, viol);
    }
    return worst;
}

double ConicProgram::max_bound_violation(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (int i = 0; i < num_variables(); ++i) {
        const Variable& v = vars_[static_cast<std::size_t>(i)];
        worst = std::max({worst, v.lo - x(i), x(i) - v.hi});
    }
    return worst;
}

double ConicProgram::max_cone_violation(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (const RotatedCone& c : cones_) {
        double a = c.a.eval(x), b = c.b.eval(x), uu = 0.0;
        for (const AffineExpr& u : c.u) {
            double val = u.eval(x);
            uu += val * val;
        }
        // Distance-like measure: ||(u, (a-b)/2)|| - (a+b)/2.
        double t = 0.5 * (a + b), d = 0.5 * (a - b);
        worst = std::max({worst, std::sqrt(uu + d * d) - t, -a, -b});
    }
    return worst;
}

namespace {

void put_terms(std::ostream& out, const std::vector<Term>& terms) {
    char buf[64];
    out << ' ' << terms.size();
    for (const Term& t : terms) {
        std::snprintf(buf, sizeof buf, " %d:%.17g", t.var, t.coef);
        out << buf;
    }
}

void put_expr(std::ostream& out, const AffineExpr& e) {
    char buf[48];
    std::snprintf(buf, sizeof buf, " %.17g", e.constant);
    out << buf;
    put_terms(out, e.terms);
}

std::string num(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void ConicProgram::dump(std::ostream& out) const {
    out << "# maropf conic program, format 1\n";
    out << "variables " << vars_.size() << '\n';
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        const Variable& v = vars_[i];
        out << "v " << i << ' ' << v.name << ' ' << num(v.lo) << ' ' << num(v.hi) << ' ' << (v.binary ? 'B' : 'C')
            << '\n';
    }
    out << "rows " << rows_.size() << '\n';
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        const LinearRow& row = rows_[r];
        char s = row.sense == Sense::Le ? 'L' : row.sense == Sense::Ge ? 'G' : 'E';
        out << "r " << r << ' ' << row.tag << ' ' << s << ' ' << num(row.rhs);
        put_terms(out, row.terms);
        out << '\n';
    }
    out << "cones " << cones_.size() << '\n';
    for (std::size_t k = 0; k < cones_.size(); ++k) {
        const RotatedCone& c = cones_[k];
        out << "k " << k << ' ' << c.tag << " a";
        put_expr(out, c.a);
        out << " b";
        put_expr(out, c.b);
        out << " u " << c.u.size();
        for (const AffineExpr& u : c.u) put_expr(out, u);
        out << '\n';
    }
    out << "objective";
    put_expr(out, objective_);
    out << '\n';
}

}  // namespace maropf
