#include "json.hpp"

#include "eb/types.hpp"

namespace eb {

std::string BoundReport::to_json() const {
  nlohmann::json j;
  j["relaxation"] = to_string(relaxation);
  j["bound"] = bound;
  j["primal_value"] = primal_value;
  j["dual_gap"] = dual_gap;
  j["iterations"] = iterations;
  j["wall_time_s"] = wall_time_s;
  j["termination"] = to_string(termination);
  j["rho"] = rho;
  j["gamma"] = gamma;
  j["seed"] = seed;
  j["event_counters"] = event_counters;
  if (x_feas.size() > 0)
    j["x_feas"] = std::vector<double>(x_feas.data(), x_feas.data() + x_feas.size());
  if (!trace.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& t : trace) {
      rows.push_back({{"iter", t.iter},
                      {"time_s", t.time_s},
                      {"primal", t.primal},
                      {"bound", t.bound},
                      {"gap", t.gap},
                      {"res_primal", t.res_primal},
                      {"res_dual", t.res_dual}});
    }
    j["trace"] = std::move(rows);
  }
  return j.dump(2);
}

}  // namespace eb
