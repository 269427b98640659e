#include <algorithm>
#include <chrono>

#include "sfcnet/errors.hpp"
#include "sfcnet/solvers.hpp"

namespace sfcnet {

double dcgm_z(const LayerModel& layer) {
  if (layer.is_ficm()) return *layer.z;
  // A BiRG layer is a FiCM with unit fitnesses: p = z / (1 + z).
  double pairs = static_cast<double>(layer.origins) * static_cast<double>(layer.destinations);
  if (layer.no_self_loops) pairs -= static_cast<double>(std::min(layer.origins, layer.destinations));
  const double links = layer.target_links;
  if (!(links > 0.0) || !(links < pairs))
    throw SolverError("dcgm: layer " + std::string(to_string(layer.kind)) +
                      " has no finite uniform-fitness z");
  return links / (pairs - links);
}

FlowSolution dcgm_weights(const LinearSystem& system, const FlowSolution& reference,
                          const std::array<LayerModel, kLayerCount>& layers) {
  const auto start = std::chrono::steady_clock::now();
  if (reference.xi.size() != static_cast<Eigen::Index>(system.cols()))
    throw SolverError("dcgm: reference solution does not match the system");

  FlowSolution sol;
  sol.method = Method::Dcgm;
  sol.xi = Eigen::VectorXd::Zero(reference.xi.size());
  const auto& index = system.index;

  for (std::size_t l = 0; l < kLayerCount; ++l) {
    const auto& model = layers[l];
    const auto [first, last] = index.layer_range(kAllLayers[l]);
    if (first == last) continue;

    std::vector<double> s_out(model.origins, 0.0);
    std::vector<double> s_in(model.destinations, 0.0);
    double total = 0.0;
    for (std::size_t c = first; c < last; ++c) {
      const auto& key = index.key(c);
      const double v = reference.xi(static_cast<Eigen::Index>(c));
      s_out[key.origin] += v;
      s_in[key.destination] += v;
      total += v;
    }
    if (total == 0.0) {
      sol.note += "dcgm: reference total of layer " + std::string(to_string(model.kind)) +
                  " is zero, weights set to 0; ";
      continue;
    }

    const double inv_z = 1.0 / dcgm_z(model);
    double raw_total = 0.0;
    for (std::size_t c = first; c < last; ++c) {
      const auto& key = index.key(c);
      const double raw = inv_z + s_out[key.origin] * s_in[key.destination];
      sol.xi(static_cast<Eigen::Index>(c)) = raw;
      raw_total += raw;
    }
    const double W = raw_total / total;
    for (std::size_t c = first; c < last; ++c) sol.xi(static_cast<Eigen::Index>(c)) /= W;
  }

  sol.residual_l2 = (system.A * sol.xi - system.b).norm();
  sol.converged = true;
  sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

}  // namespace sfcnet
