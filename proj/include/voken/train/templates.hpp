#pragma once

#include <string>
#include <vector>

namespace voken::train {

// The three interleaved-generation task templates. Prompts are built as
//   "<history context> <instruction...>"
// where the history context is the preceding steps' texts with
// <Img><ImageHere></Img> placeholders for their images.
enum class TaskKind { text_only, image_only, multimodal };

inline const char* task_kind_name(TaskKind k) {
    switch (k) {
        case TaskKind::text_only: return "text_only";
        case TaskKind::image_only: return "image_only";
        case TaskKind::multimodal: return "multimodal";
    }
    return "?";
}

// instruction suffixes; the current step's payload is appended where noted
inline constexpr const char* kTextOnlyInstruction =
    "What happens in the next scene image: <Img><ImageHere></Img>";
inline constexpr const char* kImageOnlyInstruction =
    "Generate an image with the scene description:";  // followed by the text description
inline constexpr const char* kMultimodalInstruction = "What should happen then?";

// every fixed string that can appear in prompts; fed to build_vocab so the
// closed grammar always covers template words
inline std::vector<std::string> template_lexicon() {
    return {kTextOnlyInstruction, kImageOnlyInstruction, kMultimodalInstruction,
            "<Img><ImageHere></Img>"};
}

}  // namespace voken::train
