#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "distillery/corpus.hpp"
#include "distillery/random.hpp"

namespace distillery {

// Constant-source corpus: every example asks the same single-token question
// and the answer is one label drawn from a fixed distribution. Removing the
// dominant label's examples hands the majority to the runner-up, which makes
// the whole distillation loop observable in minutes.
inline ParallelCorpus gen_fruit_world(const std::vector<std::pair<std::string, double>>& labels,
                                      std::size_t n, std::uint64_t seed,
                                      const std::string& source_token = "fruit") {
  if (labels.empty()) throw UsageError("gen_fruit_world: empty label set");
  if (n == 0) throw UsageError("gen_fruit_world: n must be positive");
  double total = 0.0;
  std::vector<double> probs;
  for (const auto& [label, p] : labels) {
    if (label.empty()) throw UsageError("gen_fruit_world: empty label");
    if (p < 0.0) throw UsageError("gen_fruit_world: negative probability for " + label);
    probs.push_back(p);
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw UsageError("gen_fruit_world: probabilities must sum to 1");

  auto vocab = std::make_shared<Vocabulary>();
  const int src_id = vocab->add(source_token);
  std::vector<int> label_ids;
  for (const auto& [label, p] : labels) label_ids.push_back(vocab->add(label));

  Rng rng(derive_seed(seed, "fruit-world"));
  std::vector<Example> examples(n);
  for (std::size_t i = 0; i < n; ++i) {
    examples[i].id = i;
    examples[i].source = {src_id};
    examples[i].target = {label_ids[sample_discrete(rng, probs)]};
  }
  return ParallelCorpus(std::move(examples), std::move(vocab));
}

struct DialogueTopic {
  std::string name;
  std::vector<std::string> sources;
  std::vector<std::string> responses;
};

// Template inventory for the dialogue-shaped corpus. Topics carry specific
// response inventories of graded size, so as the generic share of the training
// data shrinks, topics tip over from generic to specific argmax responses one
// after another rather than all at once.
struct DialogueTemplates {
  std::vector<std::string> generic;
  std::vector<DialogueTopic> topics;

  static const DialogueTemplates& standard();
};

inline const DialogueTemplates& DialogueTemplates::standard() {
  static const DialogueTemplates t{
      {
          "i don 't know .",
          "i don 't know what you mean .",
          "i am not sure .",
          "i can 't tell you .",
      },
      {
          {"weather",
           {
               "what is the weather like today ?",
               "do you think it will rain ?",
               "is it cold outside ?",
               "how was the weather on your trip ?",
               "should i bring an umbrella ?",
               "did you see the storm last night ?",
           },
           {
               "it looks like rain is coming .",
               "the sun should be out by noon .",
           }},
          {"food",
           {
               "what do you want for dinner ?",
               "have you tried the new place on main street ?",
               "do you like spicy food ?",
               "what did you cook last night ?",
               "can you pass me the menu ?",
               "is the soup any good ?",
           },
           {
               "i could eat pasta every day .",
               "the soup here is amazing .",
               "let 's just order pizza .",
           }},
          {"music",
           {
               "what kind of music do you listen to ?",
               "did you hear the new album ?",
               "can you play the guitar ?",
               "who is your favorite singer ?",
               "was the concert loud ?",
               "do you sing in the shower ?",
           },
           {
               "i mostly listen to old jazz records .",
               "the drummer stole the show .",
               "my guitar needs new strings .",
               "that song has been stuck in my head .",
           }},
          {"travel",
           {
               "where did you go last summer ?",
               "have you ever been to the mountains ?",
               "how long was the flight ?",
               "do you prefer trains or planes ?",
               "what should i pack for the trip ?",
               "did you take many photos ?",
           },
           {
               "the train ride through the hills was lovely .",
               "my flight was delayed for three hours .",
               "pack light and bring good shoes .",
               "the old town was full of narrow streets .",
           }},
          {"sports",
           {
               "did you watch the game last night ?",
               "who do you think will win the cup ?",
               "do you still go running ?",
               "how often do you train ?",
               "was the match close ?",
               "can you teach me to swim ?",
           },
           {
               "the keeper saved two penalties .",
               "i run five miles every morning .",
               "our team needs a better coach .",
               "the second half was much faster .",
               "swimming is easier than it looks .",
           }},
          {"films",
           {
               "have you seen anything good lately ?",
               "what did you think of the ending ?",
               "do you like scary movies ?",
               "who was in the lead role ?",
               "should we go to the cinema tonight ?",
               "was the book better than the film ?",
           },
           {
               "the ending made no sense to me .",
               "i fell asleep halfway through .",
               "the lead actor carried the whole film .",
               "the book was better by far .",
               "we should catch the late showing .",
               "the soundtrack gave me chills .",
           }},
          {"garden",
           {
               "how are your tomatoes doing ?",
               "do you water the plants every day ?",
               "what should i plant in spring ?",
               "did the frost hurt the roses ?",
               "can i borrow your shovel ?",
               "why are the leaves turning yellow ?",
           },
           {
               "the tomatoes are ripening early this year .",
               "water them at dusk not at noon .",
               "start with herbs they forgive mistakes .",
               "the frost took half the roses .",
               "yellow leaves usually mean too much water .",
               "the shovel is in the shed .",
               "plant the beans along the fence .",
           }},
          {"school",
           {
               "how did the exam go ?",
               "what are you studying these days ?",
               "is the library open late ?",
               "do you have class tomorrow ?",
               "who teaches the history course ?",
               "can you help me with my homework ?",
           },
           {
               "the exam was harder than expected .",
               "i am buried in chemistry notes .",
               "the library closes at midnight .",
               "professor hall teaches the history course .",
               "my essay is due on friday .",
               "the lecture ran long again .",
               "study groups meet on tuesdays .",
               "i finally finished my thesis draft .",
           }},
          {"pets",
           {
               "how old is your dog ?",
               "does your cat scratch the furniture ?",
               "what should i feed a kitten ?",
               "can you watch my bird this weekend ?",
               "why does the dog bark at night ?",
               "did you take the puppy to the vet ?",
           },
           {
               "the dog turns three in october .",
               "the cat shredded the armchair again .",
               "kittens need small meals often .",
               "the vet said the puppy is healthy .",
               "he barks at the neighbor 's cat .",
               "the bird sings every morning at six .",
               "we adopted her from the shelter .",
               "goldfish are easier than parrots .",
           }},
          {"cars",
           {
               "is your car still in the shop ?",
               "what does that rattling noise mean ?",
               "should i buy a used car ?",
               "how far is it to the coast by car ?",
               "do you know a good mechanic ?",
               "did you fix the flat tire ?",
           },
           {
               "the brakes needed new pads .",
               "that rattle is probably a loose belt .",
               "used cars are fine if you check the miles .",
               "the coast is about four hours away .",
               "my mechanic works out of the old mill .",
               "the spare tire was flat too .",
               "the engine light came on again .",
               "i changed the oil myself .",
               "parking downtown costs a fortune .",
               "the heater only works on high .",
           }},
          {"sea",
           {
               "have you been to the harbor lately ?",
               "is the water warm enough to swim ?",
               "what do the fishermen catch here ?",
               "can we rent a boat for the day ?",
               "did you see the lighthouse ?",
               "when does the tide come in ?",
           },
           {
               "the harbor is full of sailboats .",
               "the water is warmest in late august .",
               "they mostly catch mackerel and cod .",
               "boat rentals open at nine .",
               "the lighthouse is worth the climb .",
               "the tide turns just after lunch .",
               "the gulls stole my sandwich .",
               "the ferry runs twice a day .",
               "storms close the pier in winter .",
               "the beach is quieter past the dunes .",
               "we found crabs under the rocks .",
               "the salt air clears my head .",
           }},
          {"space",
           {
               "did you see the meteor shower ?",
               "what is that bright star in the east ?",
               "do you own a telescope ?",
               "how far away is the moon ?",
               "when is the next eclipse ?",
               "can we see the comet tonight ?",
           },
           {
               "the meteor shower peaks after midnight .",
               "that bright star is actually venus .",
               "my telescope shows the rings of saturn .",
               "the moon is about a quarter million miles away .",
               "the eclipse comes next april .",
               "the comet is visible just before dawn .",
               "mars rises over the hill by ten .",
               "the milky way is stunning out here .",
               "light pollution hides most stars in town .",
               "the space station passes at dusk .",
               "jupiter has four moons you can spot .",
               "the north star never moves .",
               "a full moon washes out the faint stars .",
               "the observatory opens on clear nights .",
               "orion is easy to find in winter .",
               "binoculars work better than you would think .",
           }},
      }};
  return t;
}

// Dialogue-shaped corpus: pick a topic and a source template uniformly; with
// probability generic_fraction answer with a uniform generic response,
// otherwise with a uniform topic-specific response.
inline ParallelCorpus gen_synthetic_dialogues(const DialogueTemplates& templates,
                                              double generic_fraction, std::size_t n,
                                              std::uint64_t seed) {
  if (n == 0) throw UsageError("gen_synthetic_dialogues: n must be positive");
  if (generic_fraction < 0.0 || generic_fraction > 1.0)
    throw UsageError("gen_synthetic_dialogues: generic_fraction outside [0, 1]");
  if (templates.generic.empty() || templates.topics.empty())
    throw UsageError("gen_synthetic_dialogues: template inventory is empty");
  for (const auto& topic : templates.topics)
    if (topic.sources.empty() || topic.responses.empty())
      throw UsageError("gen_synthetic_dialogues: topic " + topic.name + " has empty templates");

  auto vocab = std::make_shared<Vocabulary>();
  auto intern = [&vocab](const std::string& line) {
    std::vector<int> ids;
    for (const auto& tok : tokenize(line)) ids.push_back(vocab->add(tok));
    return ids;
  };
  std::vector<std::vector<int>> generic_ids;
  for (const auto& g : templates.generic) generic_ids.push_back(intern(g));
  std::vector<std::vector<std::vector<int>>> source_ids(templates.topics.size());
  std::vector<std::vector<std::vector<int>>> response_ids(templates.topics.size());
  for (std::size_t t = 0; t < templates.topics.size(); ++t) {
    for (const auto& s : templates.topics[t].sources) source_ids[t].push_back(intern(s));
    for (const auto& r : templates.topics[t].responses) response_ids[t].push_back(intern(r));
  }

  Rng rng(derive_seed(seed, "synthetic-dialogues"));
  std::vector<Example> examples(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = uniform_index(rng, templates.topics.size());
    const std::size_t s = uniform_index(rng, source_ids[t].size());
    examples[i].id = i;
    examples[i].source = source_ids[t][s];
    if (uniform01(rng) < generic_fraction) {
      examples[i].target = generic_ids[uniform_index(rng, generic_ids.size())];
    } else {
      examples[i].target = response_ids[t][uniform_index(rng, response_ids[t].size())];
    }
  }
  return ParallelCorpus(std::move(examples), std::move(vocab));
}

}  // namespace distillery
