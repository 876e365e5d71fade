#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace pit {

// Dense row-major real64 matrix. The only tensor rank in this library;
// vectors are 1xN or Nx1, scalars are 1x1.
struct Tensor2 {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("Tensor2: negative shape");
    }
    Tensor2(std::initializer_list<std::initializer_list<double>> m);

    static Tensor2 scalar(double v) {
        Tensor2 t(1, 1);
        t.data[0] = v;
        return t;
    }

    double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
    size_t size() const { return data.size(); }
    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
    bool all_finite() const;

    // Entry-wise exact equality (bit-level for normal values).
    bool operator==(const Tensor2& o) const { return rows == o.rows && cols == o.cols && data == o.data; }
};

Tensor2 identity(int n);

// Largest absolute entry-wise difference; shapes must match.
double max_abs_diff(const Tensor2& a, const Tensor2& b);

// Frobenius norm and plain sum of entries.
double frobenius_norm(const Tensor2& a);
double sum_entries(const Tensor2& a);

// A trainable value with its accumulated gradient. Gradient shape always
// mirrors the value shape; zero_grad() resets it to exact zeros.
struct Param {
    Tensor2 value;
    Tensor2 grad;
    bool trainable = true;
    std::string name;

    Param() = default;
    explicit Param(Tensor2 v, std::string n = "", bool train = true)
        : value(std::move(v)), grad(value.rows, value.cols, 0.0), trainable(train), name(std::move(n)) {}

    void zero_grad() { grad.fill(0.0); }
};

// splitmix64; used to derive independent sub-seeds from the single run seed.
// Stream k of base seed s is splitmix64(s ^ (k+1)*0x9E3779B97F4A7C15).
uint64_t splitmix64(uint64_t x);
uint64_t sub_seed(uint64_t base, uint64_t stream);

}  // namespace pit
