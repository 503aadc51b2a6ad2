#include "coach/domains/grid_map.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "coach/error.hpp"

namespace coach::domains {

GridMap GridMap::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  GridMap map;
  std::map<char, std::string> legend;
  bool header_ok = false;
  bool in_grid = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (in_grid) {
      if (line.empty()) continue;
      map.rows_.push_back(line);
      continue;
    }
    if (line.empty() || line[0] == '%') continue;
    std::istringstream words(line);
    std::string key;
    words >> key;
    if (key == "coach-map") {
      int version = 0;
      words >> version;
      if (version != 1) throw ParseError("map: unsupported version " + std::to_string(version));
      header_ok = true;
    } else if (key == "name") {
      words >> map.name_;
    } else if (key == "landmark") {
      std::string ch, name;
      words >> ch >> name;
      if (ch.size() != 1 || name.empty() || ch == "#" || ch == ".")
        throw ParseError("map: bad landmark line '" + line + "'");
      legend[ch[0]] = name;
    } else if (key == "grid") {
      in_grid = true;
    } else {
      throw ParseError("map: unknown directive '" + key + "'");
    }
  }
  if (!header_ok) throw ParseError("map: missing 'coach-map 1' header");
  if (map.rows_.empty()) throw ParseError("map: empty grid");
  map.height_ = static_cast<int>(map.rows_.size());
  map.width_ = 0;
  for (const auto& r : map.rows_) map.width_ = std::max<int>(map.width_, static_cast<int>(r.size()));
  map.index_.assign(static_cast<std::size_t>(map.width_) * map.height_, -1);
  for (int r = 0; r < map.height_; ++r) {
    for (int c = 0; c < static_cast<int>(map.rows_[r].size()); ++c) {
      const char ch = map.rows_[r][c];
      if (ch == '#' || ch == ' ') continue;
      const int cell = static_cast<int>(map.coords_.size());
      map.coords_.emplace_back(r, c);
      map.index_[static_cast<std::size_t>(r) * map.width_ + c] = cell;
      if (ch == '.') continue;
      const auto it = legend.find(ch);
      if (it == legend.end()) throw ParseError(std::string("map: undeclared landmark '") + ch + "'");
      if (map.landmarks_.contains(it->second))
        throw ParseError("map: landmark '" + it->second + "' placed twice");
      map.landmarks_[it->second] = cell;
    }
  }
  for (const auto& [ch, name] : legend)
    if (!map.landmarks_.contains(name)) throw ParseError("map: landmark '" + name + "' not placed");
  map.landmark_cell_.assign(map.coords_.size(), 0);
  for (const auto& [name, cell] : map.landmarks_)
    if (name.rfind("start", 0) != 0) map.landmark_cell_[cell] = 1;
  map.neighbors_.resize(map.coords_.size());
  for (int cell = 0; cell < map.num_cells(); ++cell) {
    const auto [r, c] = map.coords_[cell];
    map.neighbors_[cell] = {map.cell_at(r - 1, c), map.cell_at(r + 1, c), map.cell_at(r, c - 1),
                            map.cell_at(r, c + 1)};
  }
  return map;
}

int GridMap::cell_at(int r, int c) const {
  if (r < 0 || c < 0 || r >= height_ || c >= width_) return -1;
  return index_[static_cast<std::size_t>(r) * width_ + c];
}

int GridMap::neighbor(int cell, Direction dir) const { return neighbors_.at(cell)[dir]; }

int GridMap::landmark(const std::string& name) const {
  const auto it = landmarks_.find(name);
  if (it == landmarks_.end()) throw ValidationError("map " + name_ + " has no landmark " + name);
  return it->second;
}

bool GridMap::is_landmark(int cell) const { return landmark_cell_.at(cell) != 0; }

int GridMap::chebyshev(int a, int b) const {
  return std::max(std::abs(row(a) - row(b)), std::abs(col(a) - col(b)));
}

}  // namespace coach::domains
