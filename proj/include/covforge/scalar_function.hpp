#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace covforge {

// Closed-form scalar function of one variable, a sum of power, exponential
// and harmonic terms. Used for f(z)-type spatial maps and graded profiles.
struct ScalarTerm {
    enum class Kind { power, exp, sin, cos };

    Kind kind = Kind::power;
    double coeff = 0.0;
    int power = 0;       // Kind::power
    double rate = 0.0;   // Kind::exp: e^{rate z}; Kind::sin/cos: wavenumber
    double phase = 0.0;  // Kind::sin/cos

    // k-th derivative at z, k = 0..3
    double derivative(int k, double z) const
    {
        switch (kind) {
        case Kind::power: {
            if (k > power) return 0.0;
            double factor = coeff;
            for (int i = 0; i < k; ++i) factor *= static_cast<double>(power - i);
            return factor * std::pow(z, power - k);
        }
        case Kind::exp:
            return coeff * std::pow(rate, k) * std::exp(rate * z);
        case Kind::sin:
        case Kind::cos: {
            // d^k sin(x) = sin(x + k pi/2), d^k cos(x) = cos(x + k pi/2)
            const double arg = rate * z + phase + k * std::numbers::pi / 2.0;
            const double scale = coeff * std::pow(rate, k);
            return scale * (kind == Kind::sin ? std::sin(arg) : std::cos(arg));
        }
        }
        return 0.0;
    }
};

struct ScalarFunction {
    std::vector<ScalarTerm> terms;

    static ScalarFunction identity() { return linear(1.0); }

    static ScalarFunction linear(double slope, double offset = 0.0)
    {
        ScalarFunction f;
        f.terms.push_back({ScalarTerm::Kind::power, slope, 1});
        if (offset != 0.0) f.terms.push_back({ScalarTerm::Kind::power, offset, 0});
        return f;
    }

    static ScalarFunction exponential(double coeff = 1.0, double rate = 1.0)
    {
        ScalarFunction f;
        f.terms.push_back({ScalarTerm::Kind::exp, coeff, 0, rate});
        return f;
    }

    ScalarFunction& add(ScalarTerm t)
    {
        terms.push_back(t);
        return *this;
    }

    double derivative(int k, double z) const
    {
        double s = 0.0;
        for (const auto& t : terms) s += t.derivative(k, z);
        return s;
    }

    double operator()(double z) const { return derivative(0, z); }
    double d1(double z) const { return derivative(1, z); }
    double d2(double z) const { return derivative(2, z); }

    bool is_identity() const
    {
        return terms.size() == 1 && terms[0].kind == ScalarTerm::Kind::power && terms[0].power == 1
            && terms[0].coeff == 1.0;
    }

    void validate() const
    {
        for (const auto& t : terms) {
            if (!std::isfinite(t.coeff) || !std::isfinite(t.rate) || !std::isfinite(t.phase))
                throw std::invalid_argument("scalar function term has a non-finite parameter");
            if (t.kind == ScalarTerm::Kind::power && (t.power < 0 || t.power > 12))
                throw std::invalid_argument("scalar function power must lie in [0, 12]");
        }
    }
};

} // namespace covforge
