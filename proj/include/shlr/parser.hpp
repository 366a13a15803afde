#pragma once

#include "shlr/algebra.hpp"

#include <cctype>
#include <functional>
#include <string>

namespace shlr {

/// Recursive-descent parser for the element grammar:
///   expr   := term (('+'|'-') term)*
///   term   := factor ('*' factor)* ('^' uint applies to the last factor)
///   factor := rational | generator | '(' expr ')' | '-' factor
class ExprParser {
  public:
    ExprParser(const Algebra& a, const std::string& s) : alg_(a), s_(s) {}

    Elem parse() {
        Elem e = expr();
        skip();
        if (pos_ != s_.size()) throw argument_error("trailing input in expression: " + s_);
        return alg_.reduce(e);
    }

  private:
    const Algebra& alg_;
    const std::string& s_;
    size_t pos_ = 0;

    void skip() {
        while (pos_ < s_.size() && std::isspace((unsigned char)s_[pos_])) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    char peek() {
        skip();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    Elem expr() {
        Elem e = term();
        while (true) {
            if (eat('+'))
                e += term();
            else if (eat('-'))
                e -= term();
            else
                return e;
        }
    }

    Elem term() {
        Elem e = factor_pow();
        while (eat('*')) e = alg_.mul(e, factor_pow());
        return e;
    }

    Elem factor_pow() {
        Elem e = factor();
        if (eat('^')) e = alg_.pow(e, uint_lit());
        return e;
    }

    int uint_lit() {
        skip();
        size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit((unsigned char)s_[pos_])) ++pos_;
        if (start == pos_) throw argument_error("expected integer exponent");
        return std::stoi(s_.substr(start, pos_ - start));
    }

    Elem factor() {
        skip();
        if (pos_ >= s_.size()) throw argument_error("unexpected end of expression");
        char c = s_[pos_];
        if (c == '-') {
            ++pos_;
            return -factor();
        }
        if (c == '(') {
            ++pos_;
            Elem e = expr();
            if (!eat(')')) throw argument_error("missing ')'");
            return e;
        }
        if (std::isdigit((unsigned char)c)) {
            size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit((unsigned char)s_[pos_])) ++pos_;
            if (pos_ < s_.size() && s_[pos_] == '/') {
                ++pos_;
                size_t dstart = pos_;
                while (pos_ < s_.size() && std::isdigit((unsigned char)s_[pos_])) ++pos_;
                if (dstart == pos_) throw argument_error("missing denominator");
                Rat r = rat_parse(s_.substr(start, pos_ - start));
                return r * Elem::one();
            }
            return Rat(Int(s_.substr(start, pos_ - start))) * Elem::one();
        }
        if (std::isalpha((unsigned char)c) || c == '_') {
            size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isalnum((unsigned char)s_[pos_]) || s_[pos_] == '_' || s_[pos_] == '\''))
                ++pos_;
            return alg_.gen_elem(s_.substr(start, pos_ - start));
        }
        if (c == '[') {
            // bracketed generator names (Hall trees): one balanced token
            size_t start = pos_;
            int depth = 0;
            while (pos_ < s_.size()) {
                if (s_[pos_] == '[') ++depth;
                if (s_[pos_] == ']') {
                    --depth;
                    if (depth == 0) {
                        ++pos_;
                        break;
                    }
                }
                ++pos_;
            }
            if (depth != 0) throw argument_error("unbalanced '[' in expression");
            return alg_.gen_elem(s_.substr(start, pos_ - start));
        }
        throw argument_error(std::string("unexpected character '") + c + "' in expression");
    }
};

inline Elem parse_elem(const Algebra& a, const std::string& s) { return ExprParser(a, s).parse(); }

/// Build the normal-form oracle for A/I up to the polynomial-degree window.
/// All generators of `amb` must sit in degree 0 with zero differential; ideal
/// generators in degree 0. Exact linear elimination on the monomial basis.
inline AlgPtr quotient_window(const AlgPtr& amb, const std::vector<Elem>& ideal_gens, int window) {
    for (auto& g : amb->gens)
        if (g.degree != 0)
            throw argument_error("quotient_window: ambient generators must have degree 0");
    for (auto& f : ideal_gens)
        if (!f.is_zero() && !amb->homogeneous_of_degree(f, 0))
            throw argument_error("quotient_window: ideal generators must have degree 0");
    if (window < 0) throw argument_error("quotient_window: negative window");

    // Enumerate monomials of poly degree <= window.
    std::vector<Monomial> monos;
    Monomial cur;
    std::function<void(int, int)> gen = [&](int g, int room) {
        if (g == amb->n_gens()) {
            monos.push_back(cur);
            return;
        }
        for (int e = 0; e <= room; ++e) {
            if (e > 0) cur.factors.push_back({g, e});
            gen(g + 1, room - e);
            if (e > 0) cur.factors.pop_back();
        }
    };
    gen(0, window);
    std::sort(monos.begin(), monos.end(), [&](const Monomial& a, const Monomial& b) {
        if (a.poly_degree() != b.poly_degree()) return a.poly_degree() < b.poly_degree();
        return a < b;
    });
    std::map<Monomial, int> col;
    for (int i = 0; i < (int)monos.size(); ++i) col[monos[i]] = i;

    // Spanning set of the ideal inside the window.
    std::vector<SparseRow> rows;
    for (auto& f : ideal_gens) {
        int fdeg = amb->poly_degree_of(f);
        for (auto& m : monos) {
            if (m.poly_degree() + fdeg > window) continue;
            Elem prod = amb->mul(Elem{{{m, Rat(1)}}}, f);
            SparseRow r;
            bool in_window = true;
            for (auto& [mm, c] : prod.terms) {
                auto it = col.find(mm);
                if (it == col.end()) {
                    in_window = false;
                    break;
                }
                r[it->second] = c;
            }
            if (in_window && !r.empty()) rows.push_back(std::move(r));
        }
    }
    Echelon ech = echelon_form(rows, (int)monos.size());

    NormalFormTable nf;
    nf.window = window;
    for (int i = 0; i < ech.rank(); ++i) {
        Elem tail;
        for (auto& [j, v] : ech.rows[i]) {
            if (j == ech.pivot_col[i]) continue;
            tail -= v * Elem{{{monos[j], Rat(1)}}};
        }
        nf.reducers[monos[ech.pivot_col[i]]] = tail;
    }

    auto q = std::make_shared<Algebra>(*amb);
    q->oracle = std::move(nf);
    return q;
}

}  // namespace shlr
