#include "muca/prompts.hpp"

namespace muca::prompts {

namespace {

PromptTemplate make(std::string_view name, std::string body, std::vector<std::string> slots) {
    return PromptTemplate(std::string(name), std::move(body), std::move(slots));
}

}  // namespace

const PromptTemplate& subtopic_generation() {
    static const auto t = make(names::kSubtopicGeneration,
                               R"(You are preparing a group discussion.
Topic: {topic}
Hints: {hints}
Attendee roles: {attendee_roles}

Propose exactly {count} concrete sub-topics the attendees need to discuss to accomplish the topic.
Stay within the information given above; do not invent constraints.
Think step by step, then write the sub-topics one per line after "ANSWER:".
)",
                               {"topic", "hints", "attendee_roles", "count"});
    return t;
}

const PromptTemplate& topic_summary() {
    static const auto t = make(names::kTopicSummary,
                               R"(Discussion topic: {topic}
Sub-topics:
{subtopics}
Previous topic summaries:
{previous_summaries}
Recent conversation:
{window}

For every sub-topic, update its summary with what participants said in the recent conversation.
Summarize each participant's opinion. Keep each summary to one line.
After "ANSWER:" write one line per sub-topic as "<sub-topic number>: <summary>".
)",
                               {"topic", "subtopics", "previous_summaries", "window"});
    return t;
}

const PromptTemplate& subtopic_status() {
    static const auto t = make(names::kSubtopicStatus,
                               R"(Sub-topics:
{subtopics}
Previous statuses:
{prev_status}
Topic summaries:
{topic_summaries}
Recent conversation:
{window}

Classify each sub-topic as "not discussed", "being discussed" or "well discussed".
"well discussed" means a consensus has been reached by the majority of participants and the remaining
participants do not have conflicting suggestions.
First list the sub-topic numbers, then summarize each participant's opinion per sub-topic, then decide
whether the discussion meets the definition of "well discussed".
After "ANSWER:" write one line per sub-topic as "<sub-topic number>: <status>".
)",
                               {"subtopics", "prev_status", "topic_summaries", "window"});
    return t;
}

const PromptTemplate& discussed_subtopics() {
    static const auto t = make(names::kDiscussedSubtopics,
                               R"(Sub-topics:
{subtopics}
Recent conversation:
{window}

Which of the sub-topics above are being discussed in the recent conversation? Several may be discussed
at the same time. If the conversation is unrelated chit-chat, answer "none".
After "ANSWER:" write the exact sub-topic titles, one per line.
)",
                               {"subtopics", "window"});
    return t;
}

const PromptTemplate& accumulative_summary() {
    static const auto t = make(names::kAccumulativeSummary,
                               R"(Participant: {participant}
Sub-topic: {subtopic}
Previous summary of this participant's contributions to the sub-topic:
{previous_summary}
Recent conversation:
{window}

Merge the previous summary with anything new this participant said about the sub-topic in the recent
conversation. Keep it succinct. Write only the revised summary after "ANSWER:".
)",
                               {"participant", "subtopic", "previous_summary", "window"});
    return t;
}

const PromptTemplate& stuck_unsolved() {
    static const auto t = make(names::kStuckUnsolved,
                               R"(Recent conversation:
{window}

Decide two things about the conversation above.
stuck: 1 if the conversation is stagnant, for example participants repeat the same utterances or go in
circles without progress; otherwise 0.
unsolve: 1 if it contains an unresolved issue that {bot_name} should address; otherwise 0. Questions and
concerns exchanged between participants do not count as unresolved issues for the assistant.
Think step by step, then answer after "ANSWER:" in the form "stuck=<0|1> unsolve=<0|1>".
)",
                               {"window", "bot_name"});
    return t;
}

const PromptTemplate& direct_chatting() {
    static const auto t = make(names::kDirectChatting,
                               R"(You are {bot_name}, an assistant in a group chat.
User-input information:
{topic_info}
Accumulative summary:
{summary}
Sub-topic statuses:
{statuses}
Sub-topics being discussed: {discussed}
Recent conversation:
{window}
Last message (addressed to you):
{last_utterance}

Rules:
- If the message is a greeting or acknowledgment, reply briefly.
- Do not make assumptions beyond the user-input information. Reasonable reasoning based on the chat
  history is allowed. If the request needs facts you were not given (numbers, budgets, prices, dates),
  say the question is out of scope of the provided information instead of inventing an answer.
- If the message is a statement or comment, acknowledge it and relate it to the sub-topics.
- Otherwise answer the request concisely and address the sender by name.
Write only the reply after "ANSWER:".
)",
                               {"bot_name", "topic_info", "summary", "statuses", "discussed", "window",
                                "last_utterance"});
    return t;
}

const PromptTemplate& initiative_summarization() {
    static const auto t = make(names::kInitiativeSummarization,
                               R"(User-input information:
{topic_info}
Sub-topics being discussed: {discussed}
Accumulative summary per participant and sub-topic:
{summary}
Recent conversation:
{window}

Write a concise take-home summary of the discussion so far: decisions made, open questions, and who
proposed what. Write only the summary after "ANSWER:".
)",
                               {"topic_info", "discussed", "summary", "window"});
    return t;
}

const PromptTemplate& participation_encouragement() {
    static const auto t = make(names::kParticipationEncouragement,
                               R"(Participant to encourage: {participant}
Inactive participant status:
{inactive_status}
Accumulative summary:
{summary}
Recent conversation:
{window}

Write a short, friendly message that invites the participant above to share their view. Personalize it
using their status and interests; if they have spoken before, refer to what they said. Do not pressure
them. Write only the message after "ANSWER:".
)",
                               {"participant", "inactive_status", "summary", "window"});
    return t;
}

const PromptTemplate& subtopic_transition() {
    static const auto t = make(names::kSubtopicTransition,
                               R"(Current sub-topic: {current_subtopic}
Next sub-topic candidates:
{candidates}
Hint: {hint}
Accumulative summary:
{summary}
Recent conversation:
{window}

Follow the hint and write one short message to the group. Write only the message after "ANSWER:".
)",
                               {"current_subtopic", "candidates", "hint", "summary", "window"});
    return t;
}

const PromptTemplate& conflict_resolution() {
    static const auto t = make(names::kConflictResolution,
                               R"(Current sub-topic: {current_subtopic}
Next sub-topic candidates:
{candidates}
Accumulative summary:
{summary}
Recent conversation:
{window}

The group has not settled any further sub-topic for a while. Write one message that includes a brief
summary of the differing opinions, suggests a concrete compromise that could help the parties reach a
consensus, and suggests a next sub-topic for discussion. Write only the message after "ANSWER:".
)",
                               {"current_subtopic", "candidates", "summary", "window"});
    return t;
}

const PromptTemplate& in_context_chime_in() {
    static const auto t = make(names::kInContextChimeIn,
                               R"(You are {bot_name}, an assistant in a group chat.
User-input information:
{topic_info}
Accumulative summary:
{summary}
Sub-topic statuses:
{statuses}
Sub-topics being discussed: {discussed}
Recent conversation:
{window}

Chime in with one short message: provide an insight related to the topic, help advance the conversation
if it is stuck, or address a concern raised to you. Do not make assumptions beyond the user-input
information; reasoning based on the chat history is allowed. Write only the message after "ANSWER:".
)",
                               {"bot_name", "topic_info", "summary", "statuses", "discussed", "window"});
    return t;
}

const PromptTemplate& user_modeling() {
    static const auto t = make(names::kUserModeling,
                               R"(Chat snippets:
{snippets}

Virtual user: {user}
Speaking roles: {roles}
Utterance traits: {traits}

Based on how people talk in the snippets, select exactly {count} speaking roles and exactly the same
number of utterance traits for the virtual user, using only names from the lists above.
Think step by step, then answer after "ANSWER:" with two lines:
roles: <comma-separated roles>
traits: <comma-separated traits>
)",
                               {"snippets", "user", "roles", "traits", "count"});
    return t;
}

const PromptTemplate& next_speaker() {
    static const auto t = make(names::kNextSpeaker,
                               R"(Discussion topic: {topic}
Participants: {users}
Recent conversation:
{window}

Who speaks next? It must be one of the participants, not {last_speaker} (the last speaker) and not
{bot_name}. Think step by step, then write only the name after "ANSWER:".
)",
                               {"topic", "users", "window", "last_speaker", "bot_name"});
    return t;
}

const PromptTemplate& speaking_role() {
    static const auto t = make(names::kSpeakingRole,
                               R"(Next speaker: {user}
Their speaking roles: {roles}
Recent conversation:
{window}

Which of their speaking roles fits the next turn best? Think step by step, then write only the role after
"ANSWER:".
)",
                               {"user", "roles", "window"});
    return t;
}

const PromptTemplate& utterance_trait() {
    static const auto t = make(names::kUtteranceTrait,
                               R"(Discussion topic: {topic}
Speaker: {user} (speaking role: {role})
Word budget: {length} words
Speaking personalities available: {traits}
Conversation summary:
{summary}
Recent conversation:
{window}

Pick the speaking personality that best fits the next utterance. Write only its name after "ANSWER:".
)",
                               {"topic", "user", "role", "length", "traits", "summary", "window"});
    return t;
}

const PromptTemplate& utterance() {
    static const auto t = make(names::kUtterance,
                               R"(Discussion topic: {topic}
You are {user}. Speaking role: {role}. Speaking personality: {trait}.
Conversation summary:
{summary}
Recent conversation:
{window}

Write your next chat message using about {length} words. Do not repeat yourself and do not speak for
other participants. Write only the message after "ANSWER:".
)",
                               {"topic", "user", "role", "trait", "summary", "window", "length"});
    return t;
}

std::vector<const PromptTemplate*> all() {
    return {&subtopic_generation(),      &topic_summary(),          &subtopic_status(),
            &discussed_subtopics(),      &accumulative_summary(),   &stuck_unsolved(),
            &direct_chatting(),          &initiative_summarization(), &participation_encouragement(),
            &subtopic_transition(),      &conflict_resolution(),    &in_context_chime_in(),
            &user_modeling(),            &next_speaker(),           &speaking_role(),
            &utterance_trait(),          &utterance()};
}

}  // namespace muca::prompts
