#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace msmv {

/// Row-major single-channel raster of doubles.
class Grid {
public:
    Grid() = default;
    Grid(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), px_(static_cast<std::size_t>(rows) * cols, fill) {}

    [[nodiscard]] int rows() const noexcept { return rows_; }
    [[nodiscard]] int cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return px_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return px_.size(); }

    double& operator()(int r, int c) {
        assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
        return px_[static_cast<std::size_t>(r) * cols_ + c];
    }
    double operator()(int r, int c) const {
        assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
        return px_[static_cast<std::size_t>(r) * cols_ + c];
    }

    [[nodiscard]] std::vector<double>& data() noexcept { return px_; }
    [[nodiscard]] const std::vector<double>& data() const noexcept { return px_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> px_;
};

}  // namespace msmv
