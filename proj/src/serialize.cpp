#include "scout/serialize.hpp"

#include "scout/error.hpp"

namespace scout {

using nlohmann::json;

json model_config_to_json(const ModelConfig& cfg) {
  return json{{"variant", variant_name(cfg.variant)},
              {"hidden_dim", cfg.hidden_dim},
              {"num_heads", cfg.num_heads},
              {"edge_dim", cfg.edge_dim},
              {"residual_connection", cfg.use_residual_connection},
              {"residual_weight", cfg.use_residual_weight},
              {"final_fc", cfg.use_final_fc},
              {"dropout", cfg.dropout_p},
              {"attention_dropout", cfg.attention_dropout_p},
              {"leaky_relu_slope", cfg.leaky_relu_slope},
              {"input_scale", cfg.input_scale},
              {"ego_relative_features", cfg.ego_relative_features},
              {"activation", cfg.activation == Activation::ReLU ? "relu" : "identity"},
              {"output_mode", cfg.output_mode == OutputMode::Velocities ? "velocities" : "positions"},
              {"t_obs", cfg.t_obs},
              {"t_pred", cfg.t_pred}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.variant = parse_variant(j.value("variant", std::string("attention")));
  cfg.hidden_dim = j.value("hidden_dim", cfg.hidden_dim);
  cfg.num_heads = j.value("num_heads", cfg.variant == Variant::Attention ? 3 : 1);
  cfg.edge_dim = j.value("edge_dim", cfg.edge_dim);
  cfg.use_residual_connection = j.value("residual_connection", cfg.use_residual_connection);
  cfg.use_residual_weight = j.value("residual_weight", cfg.use_residual_weight);
  cfg.use_final_fc = j.value("final_fc", cfg.use_final_fc);
  cfg.dropout_p = j.value("dropout", cfg.dropout_p);
  cfg.attention_dropout_p = j.value("attention_dropout", cfg.attention_dropout_p);
  cfg.leaky_relu_slope = j.value("leaky_relu_slope", cfg.leaky_relu_slope);
  cfg.input_scale = j.value("input_scale", cfg.input_scale);
  cfg.ego_relative_features = j.value("ego_relative_features", cfg.ego_relative_features);
  const std::string act = j.value("activation", std::string("relu"));
  if (act == "relu")
    cfg.activation = Activation::ReLU;
  else if (act == "identity")
    cfg.activation = Activation::Identity;
  else
    fail(ErrorCode::InvalidConfig, "unknown activation '" + act + "'");
  const std::string mode = j.value("output_mode", std::string("positions"));
  if (mode == "positions")
    cfg.output_mode = OutputMode::Positions;
  else if (mode == "velocities")
    cfg.output_mode = OutputMode::Velocities;
  else
    fail(ErrorCode::InvalidConfig, "unknown output_mode '" + mode + "'");
  cfg.t_obs = j.value("t_obs", cfg.t_obs);
  cfg.t_pred = j.value("t_pred", cfg.t_pred);
  cfg.validate();
  return cfg;
}

}  // namespace scout
