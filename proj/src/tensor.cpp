#include "pit/tensor.hpp"

#include <cmath>

namespace pit {

Tensor2::Tensor2(std::initializer_list<std::initializer_list<double>> m) {
    rows = static_cast<int>(m.size());
    cols = rows > 0 ? static_cast<int>(m.begin()->size()) : 0;
    data.reserve(static_cast<size_t>(rows) * cols);
    for (const auto& row : m) {
        if (static_cast<int>(row.size()) != cols)
            throw std::invalid_argument("Tensor2: ragged initializer");
        data.insert(data.end(), row.begin(), row.end());
    }
}

bool Tensor2::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor2 identity(int n) {
    Tensor2 t(n, n);
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

double max_abs_diff(const Tensor2& a, const Tensor2& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

double frobenius_norm(const Tensor2& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

double sum_entries(const Tensor2& a) {
    double s = 0.0;
    for (double v : a.data) s += v;
    return s;
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

uint64_t sub_seed(uint64_t base, uint64_t stream) {
    return splitmix64(base ^ ((stream + 1) * 0x9E3779B97F4A7C15ULL));
}

}  // namespace pit
