#include "streetinv/observation_store.hpp"

#include <string>
#include <utility>

namespace streetinv {

ObservationStore::ObservationStore(std::vector<Observation> observations) {
  observations_.reserve(observations.size());
  for (auto& obs : observations) add(std::move(obs));
}

void ObservationStore::add(Observation obs) {
  if (index_.count(obs.obs_id) != 0) {
    throw DataError("duplicate observation id " + std::to_string(obs.obs_id));
  }
  index_.emplace(obs.obs_id, observations_.size());
  observations_.push_back(std::move(obs));
}

const Observation& ObservationStore::at(ObsId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) {
    throw DataError("unknown observation id " + std::to_string(id));
  }
  return observations_[it->second];
}

std::vector<ObsId> ObservationStore::ids() const {
  std::vector<ObsId> out;
  out.reserve(observations_.size());
  for (const auto& obs : observations_) out.push_back(obs.obs_id);
  return out;
}

}  // namespace streetinv
