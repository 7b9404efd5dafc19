#include "srhc/random.hpp"

namespace srhc {

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b)
{
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s = h ^ (a * 0xd1342543de82ef95ULL);
    h = splitmix64(s);
    s = h ^ (b * 0xaf251af3b0f025b5ULL);
    return splitmix64(s);
}

Vector GaussianStream::standard(Eigen::Index n)
{
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        z(i) = next();
    }
    return z;
}

Vector GaussianStream::correlated(const Matrix& factor)
{
    return factor * standard(factor.cols());
}

}  // namespace srhc
