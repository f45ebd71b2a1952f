#include "plumetrace/cgo.hpp"

#include <json.hpp>

namespace plumetrace::cgo {

using nlohmann::json;

std::string direction_scheme_to_json(const DirectionScheme& scheme) {
    json j{{"k", scheme.k}, {"r", scheme.r}, {"betas", scheme.betas}, {"gammas", scheme.gammas}};
    return j.dump();
}

DirectionScheme direction_scheme_from_json(const std::string& text) {
    const json j = json::parse(text);
    DirectionScheme scheme;
    scheme.k = j.at("k").get<int>();
    scheme.r = j.at("r").get<double>();
    scheme.betas = j.at("betas").get<std::vector<double>>();
    scheme.gammas = j.at("gammas").get<std::vector<double>>();
    return scheme;
}

}  // namespace plumetrace::cgo
