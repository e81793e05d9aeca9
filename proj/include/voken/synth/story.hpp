#pragma once

#include "voken/synth/scene.hpp"

namespace voken::synth {

constexpr int kStorySteps = 5;

struct StoryStep {
    std::string narration;
    Image image;
    SceneState scene;
};

// Five scenes; each consecutive pair differs by exactly one action from
// {move, recolor, add, remove}, named by the narration.
struct Story {
    std::vector<StoryStep> steps;
};

struct DialogTurn {
    char speaker = 'A';
    std::string text;
    bool has_image = false;
    Image image;
    SceneState scene;
};

struct Dialog {
    std::vector<DialogTurn> turns;
    int forced_image_turn = -1;  // index of the turn forced to carry an image, or -1
};

Story gen_story(uint64_t seed);

Dialog gen_dialog(uint64_t seed, int turns, double p_img);

}  // namespace voken::synth
