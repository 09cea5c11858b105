#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace adcofe {

// Tensor archive: u64 little-endian header length, a JSON header (config plus
// tensor names/shapes/offsets) space-padded to a 4096-byte boundary, then
// row-major little-endian doubles. The padding keeps the file size a function
// of tensor shapes alone, not of digits in the config.
class Checkpoint {
 public:
  void set_config(const std::string& config_json);
  const std::string& config_json() const { return config_json_; }

  void add(const std::string& name, const Eigen::MatrixXd& tensor);
  // nullptr when absent
  const Eigen::MatrixXd* find(const std::string& name) const;
  const std::vector<std::pair<std::string, Eigen::MatrixXd>>& tensors() const { return tensors_; }

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  std::string config_json_ = "{}";
  std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors_;
};

}  // namespace adcofe
