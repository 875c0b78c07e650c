#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace ofusim {

// splitmix64: cheap, well-mixed stream splitter.  Used to derive independent
// per-run / per-purpose seeds from a single master seed so that adding a run
// never perturbs the draws of another.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master ^ (0x517cc1b727220a95ULL * (stream + 1));
    return splitmix64(s);
}

// Deterministic Gaussian source.  std::normal_distribution is
// implementation-defined, so we roll Box-Muller over mt19937_64 to get
// byte-identical streams on every platform.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1], u2 in [0,1)
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Standard-normal vector of length n.
    Eigen::VectorXd vector(Eigen::Index n) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = next();
        return v;
    }

    double uniform01() {
        // 53-bit mantissa uniform in [0,1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace ofusim
