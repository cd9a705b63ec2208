import string

import pytest

# Twenty short public-domain-style English/German parallel pairs.
PARALLEL_PAIRS = [
    ("the cat sits on the mat", "die katze sitzt auf der matte"),
    ("the dog runs in the garden", "der hund rennt im garten"),
    ("i drink cold water", "ich trinke kaltes wasser"),
    ("she reads a good book", "sie liest ein gutes buch"),
    ("we eat bread and cheese", "wir essen brot und kaese"),
    ("the sun shines today", "die sonne scheint heute"),
    ("he writes a long letter", "er schreibt einen langen brief"),
    ("the children play outside", "die kinder spielen draussen"),
    ("my house is very old", "mein haus ist sehr alt"),
    ("the train arrives late", "der zug kommt spaet an"),
    ("i love fresh apples", "ich liebe frische aepfel"),
    ("the night is dark and quiet", "die nacht ist dunkel und still"),
    ("they sing a beautiful song", "sie singen ein schoenes lied"),
    ("the fish swims in the river", "der fisch schwimmt im fluss"),
    ("winter is cold in the north", "der winter ist kalt im norden"),
    ("the teacher explains the lesson", "der lehrer erklaert die lektion"),
    ("a small bird flies high", "ein kleiner vogel fliegt hoch"),
    ("we walk to the market", "wir gehen zum markt"),
    ("the coffee is hot and strong", "der kaffee ist heiss und stark"),
    ("good morning my friend", "guten morgen mein freund"),
]


@pytest.fixture(scope="session")
def tiny_encoder(tmp_path_factory):
    """Small randomly initialized BERT saved locally, with a corpus vocab."""
    import torch
    from transformers import BertConfig, BertModel, BertTokenizerFast

    model_dir = tmp_path_factory.mktemp("tiny-encoder")
    words = sorted({w for src, tgt in PARALLEL_PAIRS
                    for w in (src + " " + tgt).split()})
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab += words
    vocab += list(string.ascii_lowercase)
    vocab += [f"##{c}" for c in string.ascii_lowercase]
    vocab_file = model_dir / "vocab.txt"
    vocab_file.write_text("\n".join(vocab), encoding="utf-8")

    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file), do_lower_case=True)
    torch.manual_seed(1234)
    model = BertModel(BertConfig(
        vocab_size=len(vocab), hidden_size=32, num_hidden_layers=3,
        num_attention_heads=4, intermediate_size=64,
        max_position_embeddings=64))
    model.eval()
    tokenizer.save_pretrained(model_dir)
    model.save_pretrained(model_dir)
    return str(model_dir)


@pytest.fixture(scope="session")
def pairs_tsv(tmp_path_factory):
    path = tmp_path_factory.mktemp("pairs") / "pairs.tsv"
    path.write_text("\n".join(f"{src}\t{tgt}" for src, tgt in PARALLEL_PAIRS),
                    encoding="utf-8")
    return str(path)
