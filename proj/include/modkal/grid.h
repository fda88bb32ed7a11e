// Copyright 2026 The Modkal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MODKAL_GRID_H_
#define MODKAL_GRID_H_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace modkal {

// Dense row-major matrix used for time-frequency data (rows = frames,
// cols = frequency bins).
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("negative grid shape");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int r, int c) {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  const T& operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  std::span<T> row(int r) {
    return {data_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }
  std::span<const T> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }

  std::vector<T> column(int c) const {
    std::vector<T> out(rows_);
    for (int r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }
  void set_column(int c, std::span<const T> values) {
    if (static_cast<int>(values.size()) != rows_) {
      throw std::invalid_argument("column length mismatch");
    }
    for (int r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(int rows, int cols) const {
    return rows_ == rows && cols_ == cols;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

}  // namespace modkal

#endif  // MODKAL_GRID_H_
