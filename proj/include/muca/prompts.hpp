#pragma once

#include "muca/llm.hpp"

#include <string_view>
#include <vector>

// Built-in prompt templates. Every template that asks for a structured
// answer ends with an instruction to put it after the answer marker.
namespace muca::prompts {

namespace names {
inline constexpr std::string_view kSubtopicGeneration = "subtopic_generation";
inline constexpr std::string_view kTopicSummary = "topic_summary";
inline constexpr std::string_view kSubtopicStatus = "subtopic_status";
inline constexpr std::string_view kDiscussedSubtopics = "discussed_subtopics";
inline constexpr std::string_view kAccumulativeSummary = "accumulative_summary";
inline constexpr std::string_view kStuckUnsolved = "stuck_unsolved";
inline constexpr std::string_view kDirectChatting = "direct_chatting";
inline constexpr std::string_view kInitiativeSummarization = "initiative_summarization";
inline constexpr std::string_view kParticipationEncouragement = "participation_encouragement";
inline constexpr std::string_view kSubtopicTransition = "subtopic_transition";
inline constexpr std::string_view kConflictResolution = "conflict_resolution";
inline constexpr std::string_view kInContextChimeIn = "in_context_chime_in";
inline constexpr std::string_view kUserModeling = "mus_user_modeling";
inline constexpr std::string_view kNextSpeaker = "mus_next_speaker";
inline constexpr std::string_view kSpeakingRole = "mus_speaking_role";
inline constexpr std::string_view kUtteranceTrait = "mus_utterance_trait";
inline constexpr std::string_view kUtterance = "mus_utterance";
}  // namespace names

const PromptTemplate& subtopic_generation();
const PromptTemplate& topic_summary();
const PromptTemplate& subtopic_status();
const PromptTemplate& discussed_subtopics();
const PromptTemplate& accumulative_summary();
const PromptTemplate& stuck_unsolved();

const PromptTemplate& direct_chatting();
const PromptTemplate& initiative_summarization();
const PromptTemplate& participation_encouragement();
const PromptTemplate& subtopic_transition();
const PromptTemplate& conflict_resolution();
const PromptTemplate& in_context_chime_in();

const PromptTemplate& user_modeling();
const PromptTemplate& next_speaker();
const PromptTemplate& speaking_role();
const PromptTemplate& utterance_trait();
const PromptTemplate& utterance();

/// All built-in templates, for listing and validation.
std::vector<const PromptTemplate*> all();

}  // namespace muca::prompts
