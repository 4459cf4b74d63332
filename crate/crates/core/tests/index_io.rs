use dualskip::harness::{generate_corpus, SynthSpec};
use dualskip::index::{
    build_index, decode_block, encode_block, load_index, read_index, save_index, write_index, BuildConfig,
    CorpusRecord, LoadError, PartitionStrategy, PostingList, PostingRecord, VariableParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_list(rng: &mut ChaCha8Rng) -> Vec<PostingRecord> {
    let n = rng.random_range(1..400usize);
    let mut doc = rng.random_range(0..1_000u32);
    let dense = rng.random_bool(0.5);
    (0..n)
        .map(|_| {
            doc += if dense { 1 } else { rng.random_range(1..100_000u32) };
            PostingRecord {
                doc_id: doc,
                w_bm25: rng.random(),
                w_learned: rng.random(),
            }
        })
        .collect()
}

#[test]
fn ten_thousand_lists_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..10_000 {
        let records = random_list(&mut rng);
        assert_eq!(decode_block(&encode_block(&records).unwrap()).unwrap(), records, "list {i}");
        let strategy = if i % 2 == 0 { PartitionStrategy::Fixed } else { PartitionStrategy::Variable };
        let list = PostingList::from_records(i, &records, strategy, 1 + (i as usize % 200), VariableParams::default());
        assert_eq!(list.decode_all().unwrap(), records, "list {i}");
        for b in &list.blocks {
            assert!(b.max_bm25 <= list.list_max_bm25 && b.max_learned <= list.list_max_learned);
        }
    }
}

fn corpus() -> Vec<CorpusRecord> {
    generate_corpus(&SynthSpec {
        num_docs: 2_000,
        query_count: 5,
        ..SynthSpec::default()
    })
    .unwrap()
    .docs
}

#[test]
fn builds_are_byte_identical() {
    for partition in [PartitionStrategy::Fixed, PartitionStrategy::Variable] {
        let cfg = BuildConfig {
            partition,
            block_size: 64,
            ..BuildConfig::default()
        };
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_index(&build_index(corpus(), &cfg).unwrap(), &mut a).unwrap();
        write_index(&build_index(corpus(), &cfg).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn corpus_order_does_not_change_postings() {
    let docs = corpus();
    let mut reversed = docs.clone();
    reversed.reverse();
    let a = build_index(docs, &BuildConfig::default()).unwrap();
    let b = build_index(reversed, &BuildConfig::default()).unwrap();
    // doc ids follow corpus order, so compare by name
    for (id, term) in a.terms() {
        let tb = b.term_id(term).unwrap();
        let mut la: Vec<_> = a
            .posting_list(id)
            .decode_all()
            .unwrap()
            .iter()
            .map(|r| (a.doc_name(r.doc_id).to_string(), r.w_bm25, r.w_learned))
            .collect();
        let mut lb: Vec<_> = b
            .posting_list(tb)
            .decode_all()
            .unwrap()
            .iter()
            .map(|r| (b.doc_name(r.doc_id).to_string(), r.w_bm25, r.w_learned))
            .collect();
        la.sort();
        lb.sort();
        assert_eq!(la, lb, "term {term}");
    }
}

#[test]
fn save_load_deep_equality() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.idx");
    let index = build_index(corpus(), &BuildConfig::default()).unwrap();
    save_index(&index, &path).unwrap();
    let loaded = load_index(&path).unwrap();
    assert_eq!(loaded, index);
    assert_eq!(loaded.num_postings(), index.num_postings());
    assert_eq!(loaded.scales(), index.scales());
}

#[test]
fn damaged_files_are_rejected() {
    let index = build_index(corpus(), &BuildConfig::default()).unwrap();
    let mut bytes = Vec::new();
    write_index(&index, &mut bytes).unwrap();

    let mut flipped = bytes.clone();
    let mid = flipped.len() / 2;
    flipped[mid] ^= 0x40;
    assert!(matches!(read_index(&flipped[..]), Err(LoadError::Checksum)));

    assert!(matches!(read_index(&bytes[..bytes.len() - 10]), Err(LoadError::Truncated)));

    let mut magic = bytes.clone();
    magic[0] = b'X';
    assert!(matches!(read_index(&magic[..]), Err(LoadError::BadMagic)));

    let mut version = bytes.clone();
    version[4] = 99;
    assert!(matches!(read_index(&version[..]), Err(LoadError::VersionMismatch { found: 99, .. })));

    assert!(matches!(load_index("/nonexistent/dir/x.idx"), Err(LoadError::Io(_))));
}
