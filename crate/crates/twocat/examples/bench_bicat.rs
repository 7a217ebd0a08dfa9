use twocat::bicat::build_2cat;
use twocat::congruence::RelationSet;
use twocat::term::GeneratingData;

fn main() {
    for k in [3usize, 4] {
        let mut data = GeneratingData::new();
        let objects: Vec<_> = (0..=k).map(|i| data.add_object(&format!("o{i}")).unwrap()).collect();
        for i in 0..k {
            data.add_arrow(&format!("f{}", i + 1), objects[i], objects[i + 1]).unwrap();
        }
        let t = std::time::Instant::now();
        let frag = build_2cat(data, RelationSet::default(), 6).unwrap();
        println!(
            "chain {k} bound 6: {:?}; universe {} terms, {} relations, {} structure cells",
            t.elapsed(),
            frag.partition().universe().len(),
            frag.fragment.relations.len(),
            frag.cells.count(),
        );
    }
}
