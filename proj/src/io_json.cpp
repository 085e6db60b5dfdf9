#include "gcnh/io_json.hpp"

#include <string>

#include "gcnh/error.hpp"

namespace gcnh {

using nlohmann::json;

json to_json(const ModelConfig& config) {
    json j;
    j["architecture"] = std::string(to_string(config.architecture));
    j["num_layers"] = config.num_layers;
    j["hidden_size"] = config.hidden_size;
    j["dropout_rate"] = config.dropout_rate;
    j["aggregation"] = std::string(to_string(config.aggregation));
    j["beta_trainable"] = config.beta_trainable;
    j["beta_fixed_value"] = config.beta_fixed_value ? json(*config.beta_fixed_value) : json(nullptr);
    j["share_mlps"] = config.share_mlps;
    return j;
}

ModelConfig model_config_from_json(const json& j) {
    if (!j.is_object()) {
        throw InputError("model config must be a JSON object");
    }
    ModelConfig c;
    try {
        if (j.contains("architecture")) c.architecture = parse_architecture(j["architecture"].get<std::string>());
        if (j.contains("num_layers")) c.num_layers = j["num_layers"].get<std::size_t>();
        if (j.contains("hidden_size")) c.hidden_size = j["hidden_size"].get<std::size_t>();
        if (j.contains("dropout_rate")) c.dropout_rate = j["dropout_rate"].get<double>();
        if (j.contains("aggregation")) c.aggregation = parse_aggregation(j["aggregation"].get<std::string>());
        if (j.contains("beta_trainable")) c.beta_trainable = j["beta_trainable"].get<bool>();
        if (j.contains("beta_fixed_value") && !j["beta_fixed_value"].is_null()) {
            c.beta_fixed_value = j["beta_fixed_value"].get<double>();
            if (!j.contains("beta_trainable")) {
                c.beta_trainable = false;
            }
        }
        if (j.contains("share_mlps")) c.share_mlps = j["share_mlps"].get<bool>();
    } catch (const json::exception& e) {
        throw InputError(std::string("model config: ") + e.what());
    }
    c.validate();
    return c;
}

} // namespace gcnh
