"""Instruction templates for the annotation streams.

Placeholders are substituted with plain string replacement (the
templates embed literal JSON braces, so ``str.format`` is unusable).
``{obj_}`` inside the dense-caption template is literal prompt text, not
a placeholder. The merge and auxiliary-caption templates are local
conventions of this toolkit; every prompt sent over the wire is recorded
in job provenance, so reports always show the exact template text used.
"""

from __future__ import annotations

__all__ = [
    "TEMPLATE_OBJECT_PATCH",
    "TEMPLATE_OBJECT_REFINE",
    "TEMPLATE_DENSE_CAPTION",
    "INSTANCE_CAPTION_ENTRY",
    "TEMPLATE_REFINE_CAPTION",
    "TEMPLATE_RELATION_CAPTION",
    "TEMPLATE_AUX_DENSE",
    "TEMPLATE_MERGE",
    "object_patch_prompt",
    "object_refine_prompt",
    "dense_caption_prompt",
    "refine_caption_prompt",
    "relation_caption_prompt",
    "render_relation_data",
    "aux_dense_prompt",
    "merge_prompt",
]

# ---- stream A ------------------------------------------------------------

TEMPLATE_OBJECT_PATCH = (
    "These are frames from a video that I want to upload. What does the "
    "{class_name} look like, and what is the {class_name} doing?"
)

TEMPLATE_OBJECT_REFINE = (
    "These are frames from a video that I want to upload. Please refine this "
    "caption: {caption from step 1}. The instance in the video is highlighted "
    "by a rectangular box with the color corresponding to ID {object_id}"
)

INSTANCE_CAPTION_ENTRY = (
    "The obj_{object_id} must be surrounded by a rectangular box with color "
    "number {object_id}. It is a {class_name}.{caption from step 2}"
)

TEMPLATE_DENSE_CAPTION = (
    "These are frames from a video that I want to upload. In the video, the "
    "ID number of the box is on the top left of the box. There are some "
    "instance captions:[{instance_captions}] Generate a dense caption that "
    "describes the video in detail based on the video and instance captions, "
    "including all of the instances mentioned in the instance captions and "
    "other instances in the video. Ensure that each instance mentioned in the "
    "instance caption appears exactly once in the dense caption, followed by "
    "the format {obj_} to indicate which instance caption the mentioned "
    "instance corresponds to. The {obj_} must directly follow the noun "
    "representing the instance"
)

# local conventions (no published wording exists for these two steps)

TEMPLATE_AUX_DENSE = (
    "These are frames from a video that I want to upload. Generate a dense "
    "caption that describes the video in detail."
)

TEMPLATE_MERGE = """\
You are given two dense captions describing the same video.
Caption A:
{caption_a}
Caption B:
{caption_b}
Merge them into a single detailed dense caption. Keep every obj_ marker from Caption A exactly once, directly after the noun it follows in Caption A, and do not introduce new markers. Please provide the merged caption in JSON format, with a key "merged_caption"."""

# ---- stream B ------------------------------------------------------------

TEMPLATE_REFINE_CAPTION = """\
Your task is to process video captions to make them more detailed and explanatory.
You are given a ground truth caption and a set of dense noisy captions.
Ground truth caption contains a description of the objects visible in a video, with noun phrases of significant objects surrounded by <p> and </p> tags, followed by a [SEG:x] tag.
Dense noisy captions contain additional information about the video, but they may be redundant or less precise than the ground truth caption.
Your task is to paraphrase the ground truth caption by incorporating relevant information from the dense noisy captions.
The refined caption should be more detailed and explanatory than the ground truth caption.
The refined caption should preserve the original <p>, </p>, and [SEG:x] tags.
The refined caption should also preserve the identity of [SEG:x] tags, given by a unique identifier x.

You may look at the following examples:
Example 1:
Ground truth caption:
A <p> weight </p> [SEG:1] lifter is in a <p> gym </p> [SEG:2] , and <p> he </p> [SEG:1] lifts a <p> barbell </p> [SEG:0]
Reference captions:
In the video, a man is lifting weights in a gym. He lifts the weights over his head and then drops them on the ground.
In the video, a person is seen lifting weights in a gym setting. The individual is focused on performing the weightlifting exercise, and their posture indicates a controlled and deliberate movement. The gym environment is equipped with various weightlifting equipment, and there are other people present in the background, suggesting a shared workout space. The person's attire and the equipment indicate that this is a dedicated space for physical fitness and strength training. The video captures a moment of physical exertion and dedication to fitness.
Output:
{"refined_caption": "In the video, <p> A man </p> [SEG:1] is lifting weights in a <p> gym </p> [SEG:2]. <p> He </p> [SEG:1] is lifting a <p> barbell </p> [SEG:0] over his head and then drops them on the ground."}

Example 2:
Ground truth caption:
The <p> man </p> [SEG:1] stands while holding onto the <p> swing </p> [SEG:0]
Reference captions:
In the video, a man is swinging on a swing set in a park. He is wearing a black shirt and is swinging back and forth while looking towards the camera.
In the video, a person is standing in a park, wearing a black shirt and dark pants. The individual appears to be posing or standing still, possibly enjoying the surroundings or waiting for someone. The park features a playground with visible equipment, such as a swing set, indicating a recreational area for children and families. The person is standing on a concrete surface, and there are trees and other greenery in the background, suggesting a peaceful and natural setting. The individual's pose and the environment create a calm and leisurely atmosphere.
Output:
{"refined_caption": "In the video, <p> a man </p> [SEG:1] is swinging on a <p> swing set </p> [SEG:0] in a park. He is wearing a black shirt and is swinging back and forth while looking towards the camera."}
Example 3:
Ground truth caption:
<p> She </p> [SEG:1] puts shaving <p> cream </p> [SEG:2] on <p> her </p> [SEG:1] <p> leg </p> [SEG:0] and shaves <p> her </p> [SEG:1] <p> leg </p> [SEG:0]
Reference captions:
In the video, a person is seen sitting on a tub and shaving their legs with a razor.
In the video, a person is seen sitting in a bathtub, and their legs are being shaved with a razor. The individual appears to be focused on the shaving process, and there are no other significant actions or events occurring in the video. The person's posture and the position of the razor suggest a careful and deliberate approach to shaving their legs. The setting appears to be a private bathroom, and there are no other people or objects visible in the frame.
Output:
{"refined_caption": "In the video, <p> a woman </p> [SEG:1] is seen sitting in a bathtub, shaving <p> her </p> [SEG:1] <p> legs </p> [SEG:0] with a razor. <p> She </p> [SEG:1] is applying <p> shaving cream </p> [SEG:2] on <p> her </p> [SEG:1] <p> leg </p> [SEG:0]."}

Now please refine the following caption:
Ground truth caption:
{gt_caption}
Reference captions:
{reference_captions}
Please provide the refined caption in (JSON format, with a key refined_caption.)"""

# ---- stream C ------------------------------------------------------------

TEMPLATE_RELATION_CAPTION = """\
Your task is to generate annotated video captions, given original unannotated video descriptions, the lists of subjects/objects in the video and the relation between them.

For each video, you are given a relation between a subject and an object, along with the categories and target IDs of the subject and object.
Your task is to generate a new caption annotating the subject and object in the caption with the corresponding target IDs.


You may look at the following examples:

Example 1:

Input :
  subject :
    target_id :0, category : rabbit
  object :
    target_id : 1, category : adult
  relation : lean_on
  description: "there is a white rabbit leaning on an adult by the water".

Output:
{'caption': 'there is a [white rabbit](0) leaning on an [adult](1) by the water'}


Now please process the following.

{video_relation_data}

In the new caption, the noun phrases should be included within square brackets and object ID/IDs should be included within paranthesis. E.g. [noun phrase](object ID/IDs) .

Please provide the generated caption in JSON format, with a key "caption"."""


# ---- renderers -------------------------------------------------------------

def object_patch_prompt(class_name: str) -> str:
    return TEMPLATE_OBJECT_PATCH.replace("{class_name}", class_name)


def object_refine_prompt(caption: str, object_id: int) -> str:
    return (
        TEMPLATE_OBJECT_REFINE
        .replace("{caption from step 1}", caption)
        .replace("{object_id}", str(object_id))
    )


def dense_caption_prompt(entries: list[tuple[int, str, str]]) -> str:
    """``entries`` holds (object_id, class_name, refined caption) triples."""
    rendered = ", ".join(
        INSTANCE_CAPTION_ENTRY
        .replace("{object_id}", str(oid))
        .replace("{class_name}", class_name)
        .replace("{caption from step 2}", caption)
        for oid, class_name, caption in entries
    )
    return TEMPLATE_DENSE_CAPTION.replace("{instance_captions}", rendered)


def refine_caption_prompt(gt_caption: str, reference_captions: list[str]) -> str:
    return (
        TEMPLATE_REFINE_CAPTION
        .replace("{gt_caption}", gt_caption)
        .replace("{reference_captions}", "\n".join(reference_captions))
    )


def render_relation_data(relations) -> str:
    """Render subject/object relation blocks in the template's input shape."""
    blocks = []
    for rel in relations:
        blocks.append(
            "subject :\n"
            f"  target_id : {rel.subject_id}, category : {rel.subject_category}\n"
            "object :\n"
            f"  target_id : {rel.object_id}, category : {rel.object_category}\n"
            f"relation : {rel.relation}\n"
            f'description: "{rel.description}"'
        )
    return "\n\n".join(blocks)


def relation_caption_prompt(relations) -> str:
    return TEMPLATE_RELATION_CAPTION.replace(
        "{video_relation_data}", render_relation_data(relations)
    )


def aux_dense_prompt() -> str:
    return TEMPLATE_AUX_DENSE


def merge_prompt(caption_a: str, caption_b: str) -> str:
    return TEMPLATE_MERGE.replace("{caption_a}", caption_a).replace(
        "{caption_b}", caption_b
    )
