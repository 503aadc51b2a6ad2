#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace coach::domains {

enum Direction : int { kNorth = 0, kSouth = 1, kWest = 2, kEast = 3 };

/// Walkable cells of an ASCII map with named landmarks. Cells get dense ids in
/// row-major reading order.
class GridMap {
 public:
  /// Parses the versioned map asset format:
  ///   coach-map 1
  ///   name <name>
  ///   landmark <char> <name>     (repeatable)
  ///   grid
  ///   <rows...>                  '#' wall, '.' floor, landmark chars are floor
  static GridMap parse(std::string_view text);

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] int num_cells() const noexcept { return static_cast<int>(coords_.size()); }
  [[nodiscard]] int row(int cell) const { return coords_.at(cell).first; }
  [[nodiscard]] int col(int cell) const { return coords_.at(cell).second; }
  /// -1 for walls and out-of-bounds positions.
  [[nodiscard]] int cell_at(int row, int col) const;
  /// Neighbouring cell in `dir`, or -1 when blocked.
  [[nodiscard]] int neighbor(int cell, Direction dir) const;
  [[nodiscard]] int landmark(const std::string& name) const;
  [[nodiscard]] bool has_landmark(const std::string& name) const {
    return landmarks_.contains(name);
  }
  [[nodiscard]] bool is_landmark(int cell) const;
  [[nodiscard]] const std::map<std::string, int>& landmarks() const noexcept { return landmarks_; }
  [[nodiscard]] int chebyshev(int a, int b) const;
  /// The map rows as parsed (landmark characters included).
  [[nodiscard]] const std::vector<std::string>& rows() const noexcept { return rows_; }

 private:
  std::string name_;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::string> rows_;
  std::vector<std::pair<int, int>> coords_;
  std::vector<int> index_;  // row*width+col -> cell or -1
  std::vector<std::array<int, 4>> neighbors_;
  std::map<std::string, int> landmarks_;
  std::vector<char> landmark_cell_;
};

}  // namespace coach::domains
