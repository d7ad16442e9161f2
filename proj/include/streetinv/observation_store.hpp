#pragma once

#include <cstddef>
#include <unordered_map>
#include <vector>

#include "streetinv/geometry.hpp"

namespace streetinv {

// Observations keyed by obs_id, iterated in insertion order.
class ObservationStore {
 public:
  ObservationStore() = default;
  explicit ObservationStore(std::vector<Observation> observations);

  // Throws DataError on a duplicate id.
  void add(Observation obs);

  const Observation& at(ObsId id) const;
  bool contains(ObsId id) const { return index_.count(id) != 0; }
  std::size_t size() const { return observations_.size(); }
  bool empty() const { return observations_.empty(); }

  std::vector<ObsId> ids() const;
  const std::vector<Observation>& all() const { return observations_; }

  auto begin() const { return observations_.begin(); }
  auto end() const { return observations_.end(); }

 private:
  std::vector<Observation> observations_;
  std::unordered_map<ObsId, std::size_t> index_;
};

}  // namespace streetinv
