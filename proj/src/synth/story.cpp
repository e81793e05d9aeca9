#include "voken/synth/story.hpp"

#include <algorithm>
#include <sstream>

#include "voken/core/rng.hpp"

namespace voken::synth {

namespace {

bool combo_used(const SceneState& s, ObjShape sh, ObjColor co) {
    for (const auto& o : s.objects)
        if (o.shape == sh && o.color == co) return true;
    return false;
}

bool cell_used(const SceneState& s, int row, int col) {
    for (const auto& o : s.objects)
        if (o.row == row && o.col == col) return true;
    return false;
}

// initial story scene: all (shape,color) combos distinct so narrations can
// refer to "the <color> <shape>" unambiguously
SceneState initial_scene(Rng& rng) {
    const int count = int(rng.uniform_int(1, 2));
    SceneState s;
    for (int i = 0; i < count; ++i) {
        SceneObject o;
        do {
            o.shape = ObjShape(rng.uniform_int(kNumShapes));
            o.color = ObjColor(rng.uniform_int(kNumColors));
        } while (combo_used(s, o.shape, o.color));
        do {
            const int cell = int(rng.uniform_int(kGrid * kGrid));
            o.row = cell / kGrid;
            o.col = cell % kGrid;
        } while (cell_used(s, o.row, o.col));
        s.objects.push_back(o);
    }
    s.normalize();
    return s;
}

std::string obj_phrase(const SceneObject& o) {
    return std::string(color_name(o.color)) + " " + shape_name(o.shape);
}

// One step of the action grammar. Returns the narration; mutates the scene.
// Inapplicable actions are resampled internally, never surfaced.
std::string apply_random_action(SceneState& scene, Rng& rng) {
    for (;;) {
        const int kind = int(rng.uniform_int(4));
        if (kind == 0) {  // move
            const auto& obj = scene.objects[size_t(rng.uniform_int(scene.objects.size()))];
            int row, col;
            do {
                const int cell = int(rng.uniform_int(kGrid * kGrid));
                row = cell / kGrid;
                col = cell % kGrid;
            } while (cell_used(scene, row, col));
            std::ostringstream n;
            n << "the " << obj_phrase(obj) << " moves to row " << row << " col " << col;
            SceneObject moved = obj;
            scene.objects.erase(std::find(scene.objects.begin(), scene.objects.end(), obj));
            moved.row = row;
            moved.col = col;
            scene.objects.push_back(moved);
            scene.normalize();
            return n.str();
        }
        if (kind == 1) {  // recolor
            auto& obj = scene.objects[size_t(rng.uniform_int(scene.objects.size()))];
            std::vector<ObjColor> options;
            for (int c = 0; c < kNumColors; ++c)
                if (ObjColor(c) != obj.color && !combo_used(scene, obj.shape, ObjColor(c)))
                    options.push_back(ObjColor(c));
            if (options.empty()) continue;
            const ObjColor next = options[size_t(rng.uniform_int(options.size()))];
            std::ostringstream n;
            n << "the " << obj_phrase(obj) << " becomes " << color_name(next);
            obj.color = next;
            return n.str();
        }
        if (kind == 2) {  // add
            if (int(scene.objects.size()) >= 3) continue;
            SceneObject o;
            do {
                o.shape = ObjShape(rng.uniform_int(kNumShapes));
                o.color = ObjColor(rng.uniform_int(kNumColors));
            } while (combo_used(scene, o.shape, o.color));
            do {
                const int cell = int(rng.uniform_int(kGrid * kGrid));
                o.row = cell / kGrid;
                o.col = cell % kGrid;
            } while (cell_used(scene, o.row, o.col));
            std::ostringstream n;
            n << "a " << obj_phrase(o) << " appears at row " << o.row << " col " << o.col;
            scene.objects.push_back(o);
            scene.normalize();
            return n.str();
        }
        // remove
        if (int(scene.objects.size()) <= 1) continue;
        const auto obj = scene.objects[size_t(rng.uniform_int(scene.objects.size()))];
        std::ostringstream n;
        n << "the " << obj_phrase(obj) << " disappears";
        scene.objects.erase(std::find(scene.objects.begin(), scene.objects.end(), obj));
        return n.str();
    }
}

const char* kDialogPhrases[] = {
    "what do you see",     "show me something",  "that looks nice",
    "please continue",     "tell me more",       "what comes next",
};

}  // namespace

Story gen_story(uint64_t seed) {
    Rng rng(seed ^ 0x570e9u);
    Story story;
    SceneState scene = initial_scene(rng);
    for (int step = 0; step < kStorySteps; ++step) {
        StoryStep s;
        if (step == 0)
            s.narration = caption(scene);
        else
            s.narration = apply_random_action(scene, rng);
        s.scene = scene;
        s.image = render(scene);
        story.steps.push_back(std::move(s));
    }
    return story;
}

Dialog gen_dialog(uint64_t seed, int turns, double p_img) {
    require(turns >= 2, "gen_dialog: need at least 2 turns");
    Rng rng(seed ^ 0xd1a106u);
    Dialog d;
    bool any_image = false;
    for (int t = 0; t < turns; ++t) {
        DialogTurn turn;
        turn.speaker = (t % 2 == 0) ? 'A' : 'B';
        turn.has_image = rng.bernoulli(real(p_img));
        if (turn.has_image) {
            turn.scene = gen_scene(rng.next_u64(), 2);
            turn.image = render(turn.scene);
            turn.text = "here is " + caption(turn.scene);
            any_image = true;
        } else {
            turn.text = kDialogPhrases[rng.uniform_int(std::size(kDialogPhrases))];
        }
        d.turns.push_back(std::move(turn));
    }
    if (!any_image) {
        const int t = int(rng.uniform_int(turns));
        auto& turn = d.turns[size_t(t)];
        turn.has_image = true;
        turn.scene = gen_scene(rng.next_u64(), 2);
        turn.image = render(turn.scene);
        turn.text = "here is " + caption(turn.scene);
        d.forced_image_turn = t;
    }
    return d;
}

}  // namespace voken::synth
