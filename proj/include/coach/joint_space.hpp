#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coach {

/// Row-major mixed-radix bijection between per-agent ids and a dense joint id.
/// Agent 0 is the most significant digit. Used for joint actions and for joint
/// latent profiles.
class JointSpace {
 public:
  JointSpace() = default;
  explicit JointSpace(std::vector<int> radices);
  JointSpace(std::initializer_list<int> radices) : JointSpace(std::vector<int>(radices)) {}

  [[nodiscard]] int num_agents() const noexcept { return static_cast<int>(radices_.size()); }
  [[nodiscard]] int radix(int agent) const { return radices_.at(agent); }
  [[nodiscard]] const std::vector<int>& radices() const noexcept { return radices_; }
  [[nodiscard]] std::int32_t size() const noexcept { return size_; }
  /// Number of joint ids sharing one value of `agent`'s digit step.
  [[nodiscard]] std::int32_t stride(int agent) const { return strides_.at(agent); }

  /// Throws std::out_of_range when any component exceeds its radix.
  [[nodiscard]] std::int32_t encode(std::span<const int> ids) const;
  [[nodiscard]] std::vector<int> decode(std::int32_t joint) const;
  void decode_into(std::int32_t joint, std::span<int> out) const;
  /// Single digit of a joint id without allocating.
  [[nodiscard]] int component(std::int32_t joint, int agent) const {
    return static_cast<int>((joint / strides_[agent]) % radices_[agent]);
  }

  bool operator==(const JointSpace&) const = default;

 private:
  std::vector<int> radices_;
  std::vector<std::int32_t> strides_;
  std::int32_t size_ = 0;
};

}  // namespace coach
