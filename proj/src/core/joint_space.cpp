#include "coach/joint_space.hpp"

#include <limits>

namespace coach {

JointSpace::JointSpace(std::vector<int> radices) : radices_(std::move(radices)) {
  strides_.assign(radices_.size(), 1);
  std::int64_t total = 1;
  for (int i = static_cast<int>(radices_.size()) - 1; i >= 0; --i) {
    if (radices_[i] <= 0) throw std::invalid_argument("JointSpace: radix must be positive");
    strides_[i] = static_cast<std::int32_t>(total);
    total *= radices_[i];
    if (total > std::numeric_limits<std::int32_t>::max())
      throw std::invalid_argument("JointSpace: joint size overflows int32");
  }
  size_ = radices_.empty() ? 0 : static_cast<std::int32_t>(total);
}

std::int32_t JointSpace::encode(std::span<const int> ids) const {
  if (ids.size() != radices_.size())
    throw std::out_of_range("JointSpace::encode: expected " + std::to_string(radices_.size()) +
                            " components, got " + std::to_string(ids.size()));
  std::int32_t joint = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= radices_[i])
      throw std::out_of_range("JointSpace::encode: component " + std::to_string(i) + " = " +
                              std::to_string(ids[i]) + " outside [0, " +
                              std::to_string(radices_[i]) + ")");
    joint += ids[i] * strides_[i];
  }
  return joint;
}

void JointSpace::decode_into(std::int32_t joint, std::span<int> out) const {
  if (joint < 0 || joint >= size_)
    throw std::out_of_range("JointSpace::decode: id " + std::to_string(joint) + " outside [0, " +
                            std::to_string(size_) + ")");
  if (out.size() != radices_.size()) throw std::out_of_range("JointSpace::decode: bad output size");
  for (std::size_t i = 0; i < radices_.size(); ++i) {
    out[i] = joint / strides_[i];
    joint -= out[i] * strides_[i];
  }
}

std::vector<int> JointSpace::decode(std::int32_t joint) const {
  std::vector<int> out(radices_.size());
  decode_into(joint, out);
  return out;
}

}  // namespace coach
