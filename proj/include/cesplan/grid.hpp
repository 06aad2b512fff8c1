// grid.hpp
//
// Dense row-major 2-D / 3-D arrays of doubles (and ints for column-index
// tables).  Kept deliberately tiny: contiguous storage, bounds asserted in
// debug builds only.

#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace cesplan {

template <typename T>
class Grid2T {
public:
    Grid2T() = default;
    Grid2T(int n0, int n1, T fill = T{}) : n0_(n0), n1_(n1), v_(static_cast<std::size_t>(n0) * n1, fill) {}

    T& operator()(int i, int j) {
        assert(i >= 0 && i < n0_ && j >= 0 && j < n1_);
        return v_[static_cast<std::size_t>(i) * n1_ + j];
    }
    const T& operator()(int i, int j) const {
        assert(i >= 0 && i < n0_ && j >= 0 && j < n1_);
        return v_[static_cast<std::size_t>(i) * n1_ + j];
    }

    int dim0() const { return n0_; }
    int dim1() const { return n1_; }
    std::size_t size() const { return v_.size(); }
    const std::vector<T>& flat() const { return v_; }
    std::vector<T>& flat() { return v_; }

    friend bool operator==(const Grid2T&, const Grid2T&) = default;

private:
    int n0_ = 0, n1_ = 0;
    std::vector<T> v_;
};

template <typename T>
class Grid3T {
public:
    Grid3T() = default;
    Grid3T(int n0, int n1, int n2, T fill = T{})
        : n0_(n0), n1_(n1), n2_(n2), v_(static_cast<std::size_t>(n0) * n1 * n2, fill) {}

    T& operator()(int i, int j, int k) {
        assert(i >= 0 && i < n0_ && j >= 0 && j < n1_ && k >= 0 && k < n2_);
        return v_[(static_cast<std::size_t>(i) * n1_ + j) * n2_ + k];
    }
    const T& operator()(int i, int j, int k) const {
        assert(i >= 0 && i < n0_ && j >= 0 && j < n1_ && k >= 0 && k < n2_);
        return v_[(static_cast<std::size_t>(i) * n1_ + j) * n2_ + k];
    }

    int dim0() const { return n0_; }
    int dim1() const { return n1_; }
    int dim2() const { return n2_; }
    std::size_t size() const { return v_.size(); }
    const std::vector<T>& flat() const { return v_; }
    std::vector<T>& flat() { return v_; }

    friend bool operator==(const Grid3T&, const Grid3T&) = default;

private:
    int n0_ = 0, n1_ = 0, n2_ = 0;
    std::vector<T> v_;
};

using Grid2 = Grid2T<double>;
using Grid3 = Grid3T<double>;
using Grid2i = Grid2T<int>;
using Grid3i = Grid3T<int>;

}  // namespace cesplan
