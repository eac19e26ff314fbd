#ifndef CLCNN_COMMANDS_HPP
#define CLCNN_COMMANDS_HPP

#include <string>

#include <json.hpp>

namespace clcnn::commands {

extern const char kVersion[];

// Executes one top-level command ("synth", "embed", "train", "cv", "sweep",
// "predict") against a flat JSON run spec. Every command resolves its
// defaults, writes its outputs plus a manifest holding the fully resolved
// spec and seeds, and removes partial outputs if it throws.
void run(const std::string& command, const nlohmann::json& spec);

void cmd_synth(const nlohmann::json& spec);
void cmd_embed(const nlohmann::json& spec);
void cmd_train(const nlohmann::json& spec);
void cmd_cv(const nlohmann::json& spec);
void cmd_sweep(const nlohmann::json& spec);
void cmd_predict(const nlohmann::json& spec);

}  // namespace clcnn::commands

#endif
