"""Run the batched prompting pipeline against a fixture provider.

The vocabulary is split into batches, each batch becomes one prompt, and
the responses are parsed, filtered (out-of-vocabulary, self, duplicate,
ambiguous) and aligned to label indices.  Fixtures replay canned responses
keyed by prompt hash, so this works offline; point LiveProvider at an HTTP
endpoint for the real thing.
"""
import json
import tempfile

from cuekit import batch_labels, build_neighbor_graph, render_prompt
from cuekit.neighbors import FixtureProvider

vocab = ["oak", "maple", "birch", "pine", "spruce", "willow"]

# canned responses: deliberately messy to show the post-filter at work
canned = [
    {"oak": ["maple", "birch", "granite"], "maple": ["OAK", "maple"], "birch": ["oak "]},
    {"pine": ["spruce", "spruce"], "spruce": ["pine", "fir"], "willow": ["birch"]},
]

with tempfile.TemporaryDirectory() as tmp:
    provider = FixtureProvider(tmp)
    for batch, response in zip(batch_labels(vocab, 3), canned):
        prompt = render_prompt(batch, vocab, max_neighbors=2)
        provider.store(prompt, "Here is the mapping you asked for:\n" + json.dumps(response))

    prompt = render_prompt(vocab[:3], vocab, max_neighbors=2)
    print("--- prompt for the first batch ---")
    print(prompt)
    print()

    graph, report = build_neighbor_graph(vocab, provider, batch_size=3, max_neighbors=2)

print("--- aligned neighbor graph ---")
for name, neighbors in zip(graph.classes, graph.neighbors):
    print(f"{name:>8} -> {[graph.classes[i] for i in neighbors]}")

print("\n--- filter report ---")
for drop in report.drops:
    print(f"dropped {drop.dropped_name!r} for {drop.cls!r}: {drop.reason}")
print("uncovered classes:", report.uncovered)
