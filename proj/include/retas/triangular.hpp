#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace retas {

/// Strictly lower-triangular storage: row r holds r entries (columns 0..r-1).
/// Row 0 is always empty.
template <class T>
class TriangularArray {
public:
    TriangularArray() = default;
    TriangularArray(std::size_t rows, T fill = T{})
        : rows_(rows), data_(rows * (rows > 0 ? rows - 1 : 0) / 2, fill) {}

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] bool empty() const { return rows_ == 0; }

    [[nodiscard]] std::span<T> row(std::size_t r) {
        return {data_.data() + offset(r), r};
    }
    [[nodiscard]] std::span<const T> row(std::size_t r) const {
        return {data_.data() + offset(r), r};
    }

    T& operator()(std::size_t r, std::size_t j) { return data_[offset(r) + j]; }
    const T& operator()(std::size_t r, std::size_t j) const { return data_[offset(r) + j]; }

private:
    static std::size_t offset(std::size_t r) { return r * (r > 0 ? r - 1 : 0) / 2; }

    std::size_t rows_ = 0;
    std::vector<T> data_;
};

} // namespace retas
