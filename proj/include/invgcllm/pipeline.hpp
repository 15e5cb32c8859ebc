#pragma once

#include <string>

#include "invgcllm/config.hpp"

namespace invgcllm {

// Stage entry points. Each stage reads its inputs from the output
// directory (or the configured dataset paths), writes its artifacts, and
// records the config hash so reruns can be skipped when nothing changed.
void cmd_split(const PipelineConfig& cfg);
void cmd_train_scores(const PipelineConfig& cfg);
void cmd_adjudicate(const PipelineConfig& cfg);
void cmd_train(const PipelineConfig& cfg);
void cmd_evaluate(const PipelineConfig& cfg);

// split -> score -> adjudicate -> train -> evaluate. Stages whose recorded
// hash matches the current config are skipped unless `force` is set.
void cmd_run_all(const PipelineConfig& cfg, bool force = false);

// Dispatch by stage name ("split", "train-scores", "adjudicate", "train",
// "evaluate", "all").
void run_stage(const PipelineConfig& cfg, const std::string& stage, bool force = false);

}  // namespace invgcllm
