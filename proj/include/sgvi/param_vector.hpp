#pragma once

#include <memory>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "sgvi/errors.hpp"
#include "sgvi/types.hpp"

namespace sgvi {

/// A named, column-major block of the flat parameter vector.
struct Slice {
    std::string name;
    Index offset = 0;
    Index rows = 0;
    Index cols = 1;

    Index size() const { return rows * cols; }
    bool operator==(const Slice&) const = default;
};

/// Ordered slices that tile [0, d) without gaps or overlap.
class Layout {
public:
    Layout() = default;

    explicit Layout(std::vector<Slice> slices) : slices_(std::move(slices)) {
        Index next = 0;
        for (const auto& s : slices_) {
            if (s.rows < 0 || s.cols < 0) throw InvalidArgument("layout slice '" + s.name + "' has negative shape");
            if (s.offset != next) throw InvalidArgument("layout slices must be contiguous and ordered at '" + s.name + "'");
            next += s.size();
        }
        size_ = next;
    }

    /// Builds slices back to back from (name, rows, cols) triples.
    static Layout sequential(const std::vector<std::tuple<std::string, Index, Index>>& shapes) {
        std::vector<Slice> slices;
        Index offset = 0;
        for (const auto& [name, rows, cols] : shapes) {
            slices.push_back({name, offset, rows, cols});
            offset += rows * cols;
        }
        return Layout(std::move(slices));
    }

    Index size() const { return size_; }
    const std::vector<Slice>& slices() const { return slices_; }

    const Slice& find(const std::string& name) const {
        for (const auto& s : slices_)
            if (s.name == name) return s;
        throw InvalidArgument("layout has no slice named '" + name + "'");
    }

    /// Name of the slice holding coordinate `i`, with the in-slice offset, e.g. "W1[3]".
    std::string describe(Index i) const {
        for (const auto& s : slices_)
            if (i >= s.offset && i < s.offset + s.size()) return s.name + "[" + std::to_string(i - s.offset) + "]";
        return "<out of range " + std::to_string(i) + ">";
    }

    bool operator==(const Layout&) const = default;

private:
    std::vector<Slice> slices_;
    Index size_ = 0;
};

template <class Derived>
auto slice_map(Eigen::MatrixBase<Derived>& v, const Slice& s) {
    return Eigen::Map<Matrix>(v.derived().data() + s.offset, s.rows, s.cols);
}

template <class Derived>
auto slice_map(const Eigen::MatrixBase<Derived>& v, const Slice& s) {
    return Eigen::Map<const Matrix>(v.derived().data() + s.offset, s.rows, s.cols);
}

/// Flat parameter vector theta with an immutable layout.
class ParamVector {
public:
    ParamVector() = default;

    explicit ParamVector(std::shared_ptr<const Layout> layout)
        : layout_(std::move(layout)), values_(Vector::Zero(layout_->size())) {}

    ParamVector(std::shared_ptr<const Layout> layout, Vector values)
        : layout_(std::move(layout)), values_(std::move(values)) {
        detail::require_shape(values_.size() == layout_->size(), "parameter vector length differs from its layout");
    }

    Index size() const { return values_.size(); }
    const Layout& layout() const { return *layout_; }
    const std::shared_ptr<const Layout>& layout_ptr() const { return layout_; }

    const Vector& values() const { return values_; }
    Vector& values() { return values_; }

    auto block(const std::string& name) { return slice_map(values_, layout_->find(name)); }
    auto block(const std::string& name) const { return slice_map(values_, layout_->find(name)); }

private:
    std::shared_ptr<const Layout> layout_;
    Vector values_;
};

}  // namespace sgvi
