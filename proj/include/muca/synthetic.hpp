#pragma once

#include "muca/llm.hpp"

#include <memory>

namespace muca {

/// Offline stand-in for a language model. Answers every built-in template
/// with well-formed, deterministic output driven by per-template call
/// counters: sub-topics advance, stall, then advance again; one virtual user
/// stays mostly quiet; stuck flags come up periodically; direct chatters
/// ping the bot. Used by `simulate` without a live provider and by tests.
std::unique_ptr<ScriptedProvider> make_synthetic_provider();

}  // namespace muca
