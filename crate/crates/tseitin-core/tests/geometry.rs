use std::collections::BTreeSet;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tseitin_core::grid::Dir;
use tseitin_core::partition::{Partition, PathTable};

fn partitions() -> Vec<Partition> {
    (31..=75).step_by(2).filter_map(|n1| Partition::relaxed(n1, 3).ok()).collect()
}

#[test]
fn paths_sharing_an_edge_share_an_endpoint() {
    for part in partitions() {
        let table = PathTable::new(&part);
        for e in 0..part.torus().graph().edge_count() {
            let ids = table.through(e);
            for (x, &a) in ids.iter().enumerate() {
                for &b in &ids[x + 1..] {
                    let (p, q) = (table.path(a as usize), table.path(b as usize));
                    assert!(
                        p.from == q.from || p.from == q.to || p.to == q.from || p.to == q.to,
                        "n1={} edge {e}",
                        part.n1()
                    );
                }
            }
            assert_eq!(ids.is_empty(), table.associated_center(e).is_none(), "n1={} edge {e}", part.n1());
        }
    }
}

#[test]
fn associated_center_follows_segments() {
    for part in partitions() {
        let table = PathTable::new(&part);
        for p in table.paths() {
            for (k, seg) in p.segments.iter().enumerate() {
                let (c, d) = if k < 3 { (p.from, p.dir) } else { (p.to, p.dir.opposite()) };
                for &e in seg {
                    assert_eq!(table.associated_center(e), Some((c, d)), "n1={} seg {k}", part.n1());
                    assert!(table.common_endpoints(e).contains(&c));
                }
            }
        }
    }
}

#[test]
fn chosen_paths_are_edge_disjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for part in partitions() {
        let table = PathTable::new(&part);
        for _ in 0..20 {
            let chosen: Vec<_> = (0..part.sub_squares())
                .map(|sq| part.center(sq, (rng.next_u32() as usize) % part.delta()))
                .collect();
            let mut used = BTreeSet::new();
            for sq in 0..part.sub_squares() {
                for d in [Dir::Right, Dir::Down] {
                    let other = chosen[part.sq_step(sq, d)];
                    let id = table.id_between(&part, chosen[sq], other).unwrap();
                    assert_eq!(table.endpoints(id), (chosen[sq], other));
                    for e in table.path(id).edges() {
                        assert!(used.insert(e), "n1={} edge {e} reused", part.n1());
                    }
                }
            }
        }
    }
}

#[test]
fn edge_inside_central_area_has_no_center() {
    let part = Partition::relaxed(45, 3).unwrap();
    let table = PathTable::new(&part);
    let t = part.torus();
    let e = t.edge_at(t.node(5, 5), Dir::Right);
    assert!(table.through(e).is_empty());
    assert_eq!(table.associated_center(e), None);
    let c = part.center(0, 0);
    let left = part.first_edge(c, Dir::Down);
    assert_eq!(table.associated_center(left), Some((c, Dir::Down)));
    let row = part.designated_row(c);
    let (_, col) = part.center_pos(c);
    let on_row = t.edge_at(t.node(row, col), Dir::Left);
    assert_eq!(table.associated_center(on_row).map(|x| x.0), Some(c));
}

#[test]
fn construction_is_deterministic() {
    let a = PathTable::new(&Partition::relaxed(45, 3).unwrap());
    let b = PathTable::new(&Partition::relaxed(45, 3).unwrap());
    assert_eq!(a.paths(), b.paths());
    assert_eq!(Partition::relaxed(45, 3).unwrap().dump(), Partition::relaxed(45, 3).unwrap().dump());
}
