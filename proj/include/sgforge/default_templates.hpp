#pragma once

// Built-in prompt templates in the template-file format. Mirrors the files
// under data/templates/ (a unit test keeps the two in sync).

#include <string_view>

namespace sgforge::default_templates {

inline constexpr std::string_view kExtractOriginal = R"tmpl([CHAIN]
extract_original
[TASK]
From the given sentence, the task is to extract meaningful triplets formed as <subject, predicate, object>.
Note that the subject is the entity or noun that performs the action or is being described, and the object is the entity or noun that is affected by the action or is receiving the action. The predicate is a verb or adjective without auxiliary verb, and is represented without the tense.
[EXAMPLES]
Let's take a few examples to understand how to extract meaningful triplets.
[EXAMPLE.q]
Given the sentence "a slice of bread is covered with a sour cream and guacamole," extract the meaningful triplets.
[EXAMPLE.a]
Meaningful triplets are <bread, covered with, sour cream>, and <bread, covered with, guacamole>.
[EXAMPLE.q]
Given the sentence "A beautiful woman walking a dog on top of a beach," extract meaningful triplets.
[EXAMPLE.a]
Meaningful triplets are <woman, walking with, dog>, <woman, on, beach>, and <dog, on, beach>.
[EXAMPLE.q]
Given the sentence "Four clock sitting on a floor next to a woman's feet," extract the meaningful triplets.
[EXAMPLE.a]
Meaningful triplets are <clock, sitting on, floor> and <clock, next to, feet>.
[EXAMPLE.q]
Given the sentence "One person sits in a chair looking at her phone while another rests on the couch," extract meaningful triplets.
[EXAMPLE.a]
Meaningful triplets are <person, sits in, chair>, <person, looking at, phone>, and <person, rests on, couch>.
[EXAMPLE.q]
Given the sentence "A lady and a child near a park bench with kites and ducks flying in the sky and on the ground," extract meaningful triplets.
[EXAMPLE.a]
Meaningful triplets are <lady, near, park bench>, <child, near, park bench>, <kites, flying in sky>, and <ducks, on, ground>.
[EXAMPLE.q]
Given the sentence "Two men sit on a bench near the sidewalk and one of them talks on a cell phone," extract meaningful triplets.
[EXAMPLE.a]
Meaningful triplets are <men, sit on, bench>, <bench, near, sidewalk>, and <man, talks on, phone>.
[QUESTION]
Given the sentence "{INPUT}," extract meaningful triplets.
)tmpl";

inline constexpr std::string_view kExtractParaphrase = R"tmpl([CHAIN]
extract_paraphrase
[TASK]
From the given sentence, the task is to extract meaningful triplets formed as <subject, predicate, object>.
To extract meaningful triplets from the sentence, please follow the following two steps.
Step 1: Paraphrase the sentence.
Step 2: From the paraphrased sentence obtained in the Step 1, extract meaningful triplets formed as <subject, predicate, object>.
Note that the subject is the entity or noun that performs the action or is being described, and the object is the entity or noun that is affected by the action or is receiving the action. The predicate is a verb or adjective without auxiliary verb.
[EXAMPLES]
Let's take a few examples to understand how to extract meaningful triplets.
[EXAMPLE.q]
Given the sentence "a slice of bread is covered with a sour cream and guacamole," extract meaningful triplets.
[EXAMPLE.a]
Step 1: The sentence can be paraphrased as:
A piece of bread is topped with both sour cream and guacamole.
Step 2: Meaningful triplets, where the subject and object are the simple noun, extracted from the paraphrased sentence are:
<bread, topped with, sour cream>, <bread, topped with, guacamole>.
The meaningful triplets are <bread, topped with, sour cream>, and <bread, topped with, guacamole>.
[EXAMPLE.q]
Given the sentence "A beautiful woman walking a dog on top of a beach," extract meaningful triplets.
[EXAMPLE.a]
Step 1: The sentence can be paraphrased as:
A lovely woman strolling with a dog on the beach.
Step 2: Meaningful triplets, where the subject and object are the simple noun, extracted from the paraphrased sentence are:
<woman, strolling with, dog>, <woman, on, beach>, <dog, on, beach>.
The meaningful triplets are <woman, strolling with, dog>, <woman, on, beach>, and <dog, on, beach>.
[EXAMPLE.q]
Given the sentence "Four clock sitting on a floor next to a woman's feet," extract meaningful triplets.
[EXAMPLE.a]
Step 1: The sentence can be paraphrased as:
Four clocks are placed on the floor beside a woman's feet.
Step 2: Meaningful triplets, where the subject and object are the simple noun, extracted from the paraphrased sentence are:
<clocks, placed on, floor>, <clocks, beside, feet>.
The meaningful triplets are <clocks, placed on, floor> and <clocks, beside, feet>.
[EXAMPLE.q]
Given the sentence "One person sits in a chair looking at her phone while another rests on the couch," extract meaningful triplets.
[EXAMPLE.a]
Step 1: The sentence can be paraphrased as:
A person is seated in a chair, using their phone, while someone else is relaxing on the couch.
Step 2: Meaningful triplets, where the subject and object are the simple noun, extracted from the paraphrased sentence are:
<person, seated in, chair>, <person, using, phone>, <person, relaxing on, couch>.
The meaningful triplets are <person, seated in, chair>, <person, using, phone>, and <person, relaxing on, couch>.
[EXAMPLE.q]
Given the sentence "A lady and a child near a park bench with kites and ducks flying in the sky and on the ground," extract meaningful triplets.
[EXAMPLE.a]
Step 1: The sentence can be paraphrased as:
A woman and a child are close to a park bench, while kites soar through the sky and ducks move around on the ground.
Step 2: Meaningful triplets, where the subject and object are the simple noun, extracted from the paraphrased sentence are:
<woman, close to, park bench>, <child, close to, park bench>, <kites, soar through, sky>, <ducks, move around, ground>.
The meaningful triplets are <woman, close to, park bench>, <child, close to, park bench>, <kites, soar through, sky>, and <ducks, move around, ground>.
[EXAMPLE.q]
Given the sentence "Two men sit on a bench near the sidewalk and one of them talks on a cell phone," extract meaningful triplets.
[EXAMPLE.a]
Step 1: The sentence can be paraphrased as:
Two guys are seated on a bench near the road, and one of them talks on a mobile phone.
Step 2: Meaningful triplets, where the subject and object are the simple noun, extracted from the paraphrased sentence are:
<guys, seated on, bench>, <bench, near, road>, <guy, talks on, phone>.
The meaningful triplets are <guys, seated on, bench>, <bench, near, road>, and <guy, talks on, phone>.
[QUESTION]
Given the sentence "{INPUT}," extract meaningful triplets.
)tmpl";

inline constexpr std::string_view kAlignEntity = R"tmpl([CHAIN]
align_entity
[TASK]
The predefined entity lexicon containing {LEXICON_SIZE} lexemes is numbered as follows: {LEXICON}.
Given the lexeme, the task is to find semantically relevant lexeme from the predefined entity lexicon.
However, if there is no semantically relevant lexeme in the predefined entity lexicon, please answer 0.None.
[EXAMPLES]
Let's take a few examples.
[EXAMPLE.q]
Given the lexeme "water," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
0.None
[EXAMPLE.q]
Given the lexeme "bus," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
142.vehicle
[EXAMPLE.q]
Given the lexeme "steel," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
0.None
[EXAMPLE.q]
Given the lexeme "vanity," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
110.shelf
[EXAMPLE.q]
Given the lexeme "desktop," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
72.laptop
[EXAMPLE.q]
Given the lexeme "cobble," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
104.rock
[EXAMPLE.q]
Given the lexeme "poles," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
99.pole
[EXAMPLE.q]
Given the lexeme "wastebasket," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
6.basket
[EXAMPLE.q]
Given the lexeme "blue," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
0.None
[EXAMPLE.q]
Given the lexeme "motorcyclist," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
98.player
[EXAMPLE.q]
Given the lexeme "passenger," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
91.person
[EXAMPLE.q]
Given the lexeme "pigeon," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
12.bird
[EXAMPLE.q]
Given the lexeme "grass," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
96.plant
[EXAMPLE.q]
Given the lexeme "surfboards," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
125.surfboard
[EXAMPLE.q]
Given the lexeme "striped shirts," find semantically relevant lexeme in the predefined entity lexicon.
[EXAMPLE.a]
111.shirt
[QUESTION]
Given the lexeme "{INPUT}," find semantically relevant lexeme in the predefined entity lexicon.
)tmpl";

inline constexpr std::string_view kAlignPredicate = R"tmpl([CHAIN]
align_predicate
[TASK]
The predefined predicate lexicon containing {LEXICON_SIZE} lexemes is numbered as follows: {LEXICON}.
Given the lexeme, the task is to find semantically relevant lexeme from the predefined predicate lexicon.
However, if there is no semantically relevant lexeme in the predefined predicate lexicon, please answer 0.None.
[EXAMPLES]
Let's take a few examples.
[EXAMPLE.q]
Given the lexeme "next to," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
29.near
[EXAMPLE.q]
Given the lexeme "are parked in," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
35.parked on
[EXAMPLE.q]
Given the lexeme "waiting," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
0.None
[EXAMPLE.q]
Given the lexeme "sitting," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
40.sitting on
[EXAMPLE.q]
Given the lexeme "grazing," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
14.eating
[EXAMPLE.q]
Given the lexeme "pointing to," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
0.None
[EXAMPLE.q]
Given the lexeme "lies on," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
24.lying on
[EXAMPLE.q]
Given the lexeme "sitting underneath," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
43.under
[EXAMPLE.q]
Given the lexeme "placed next to," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
29.near
[EXAMPLE.q]
Given the lexeme "looking down at," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
25.looking at
[EXAMPLE.q]
Given the lexeme "containing," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
0.has
[EXAMPLE.q]
Given the lexeme "perched on," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
40.sitting on
[EXAMPLE.q]
Given the lexeme "driving," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
0.None
[EXAMPLE.q]
Given the lexeme "hangs on," find semantically relevant lexeme in the predefined predicate lexicon.
[EXAMPLE.a]
19.hanging from
[QUESTION]
Given the lexeme "{INPUT}," find semantically relevant lexeme in the predefined predicate lexicon.
)tmpl";

inline constexpr std::string_view kCombined = R"tmpl([CHAIN]
combined
[TASK]
From the given sentence, the task is to extract meaningful triplets formed as <subject, predicate, object> and to align them with the predefined entity and predicate lexicons.
To extract aligned triplets from the sentence, please follow the following four steps.
Step 1: Paraphrase the sentence.
Step 2: From the paraphrased sentence obtained in the Step 1, extract meaningful triplets formed as <subject, predicate, object>.
Step 3: For the subject and object of each triplet obtained in the Step 2, find semantically relevant lexeme in the predefined entity lexicon. The predefined entity lexicon containing {ENTITY_LEXICON_SIZE} lexemes is numbered as follows: {ENTITY_LEXICON}.
Step 4: For the predicate of each triplet obtained in the Step 2, find semantically relevant lexeme in the predefined predicate lexicon. The predefined predicate lexicon containing {PREDICATE_LEXICON_SIZE} lexemes is numbered as follows: {PREDICATE_LEXICON}.
If there is no semantically relevant lexeme in a predefined lexicon, please answer 0.None for that component.
Note that the subject is the entity or noun that performs the action or is being described, and the object is the entity or noun that is affected by the action or is receiving the action. The predicate is a verb or adjective without auxiliary verb.
[EXAMPLES]
Let's take a few examples to understand how to extract aligned triplets.
[EXAMPLE.q]
Given the sentence "A beautiful woman walking a dog on top of a beach," extract aligned triplets.
[EXAMPLE.a]
Step 1: The sentence can be paraphrased as:
A lovely woman strolling with a dog on the beach.
Step 2: Meaningful triplets, where the subject and object are the simple noun, extracted from the paraphrased sentence are:
<woman, strolling with, dog>, <woman, on, beach>, <dog, on, beach>.
Step 3: The subjects and objects aligned with the predefined entity lexicon are:
woman: 149.woman, dog: 37.dog, beach: 7.beach.
Step 4: The predicates aligned with the predefined predicate lexicon are:
strolling with: 50.with, on: 31.on.
The aligned triplets are <149.woman, 50.with, 37.dog>, <149.woman, 31.on, 7.beach>, and <37.dog, 31.on, 7.beach>.
[EXAMPLE.q]
Given the sentence "Four clock sitting on a floor next to a woman's feet," extract aligned triplets.
[EXAMPLE.a]
Step 1: The sentence can be paraphrased as:
Four clocks are placed on the floor beside a woman's feet.
Step 2: Meaningful triplets, where the subject and object are the simple noun, extracted from the paraphrased sentence are:
<clocks, placed on, floor>, <clocks, beside, feet>.
Step 3: The subjects and objects aligned with the predefined entity lexicon are:
clocks: 30.clock, floor: 0.None, feet: 0.None.
Step 4: The predicates aligned with the predefined predicate lexicon are:
placed on: 31.on, beside: 29.near.
The aligned triplets are <30.clock, 31.on, 0.None> and <30.clock, 29.near, 0.None>.
[EXAMPLE.q]
Given the sentence "One person sits in a chair looking at her phone while another rests on the couch," extract aligned triplets.
[EXAMPLE.a]
Step 1: The sentence can be paraphrased as:
A person is seated in a chair, using their phone, while someone else is relaxing on the couch.
Step 2: Meaningful triplets, where the subject and object are the simple noun, extracted from the paraphrased sentence are:
<person, seated in, chair>, <person, using, phone>, <person, relaxing on, couch>.
Step 3: The subjects and objects aligned with the predefined entity lexicon are:
person: 91.person, chair: 28.chair, phone: 92.phone, couch: 108.seat.
Step 4: The predicates aligned with the predefined predicate lexicon are:
seated in: 40.sitting on, using: 44.using, relaxing on: 26.lying on.
The aligned triplets are <91.person, 40.sitting on, 28.chair>, <91.person, 44.using, 92.phone>, and <91.person, 26.lying on, 108.seat>.
[EXAMPLE.q]
Given the sentence "Two men sit on a bench near the sidewalk and one of them talks on a cell phone," extract aligned triplets.
[EXAMPLE.a]
Step 1: The sentence can be paraphrased as:
Two guys are seated on a bench near the road, and one of them talks on a mobile phone.
Step 2: Meaningful triplets, where the subject and object are the simple noun, extracted from the paraphrased sentence are:
<guys, seated on, bench>, <bench, near, road>, <guy, talks on, phone>.
Step 3: The subjects and objects aligned with the predefined entity lexicon are:
guys: 56.guy, bench: 10.bench, road: 124.street, guy: 56.guy, phone: 92.phone.
Step 4: The predicates aligned with the predefined predicate lexicon are:
seated on: 40.sitting on, near: 29.near, talks on: 44.using.
The aligned triplets are <56.guy, 40.sitting on, 10.bench>, <10.bench, 29.near, 124.street>, and <56.guy, 44.using, 92.phone>.
[QUESTION]
Given the sentence "{INPUT}," extract aligned triplets.
)tmpl";

}  // namespace sgforge::default_templates
