use enrtrees::models::{decode, is_cactus, is_ktree, tree_graph, Graph, Model, Root};
use enrtrees::oracle::canonical_graph_code;
use enrtrees::samplers::{CriticalSampler, ExactTables, RngStream};
use enrtrees::symmetry::SymEnrichedTree;
use rand::seq::SliceRandom;

fn draw(model: Model, n: usize, stream: u64) -> SymEnrichedTree {
    let s = model.species();
    let ctx = CriticalSampler::new(&s).unwrap();
    let tables = ExactTables::build(&s, ctx.rho(), n);
    tables.sample(n, None, &mut RngStream::new(17, stream).rng()).unwrap()
}

fn relabel(g: &Graph, perm: &[u32]) -> Graph {
    let edges = g.edges().iter().map(|&(a, b)| (perm[a as usize], perm[b as usize])).collect();
    let root = match g.root() {
        Root::None => Root::None,
        Root::Vertex(r) => Root::Vertex(perm[*r as usize]),
        Root::Front(f) => Root::Front(f.iter().map(|&v| perm[v as usize]).collect()),
    };
    Graph::new(g.vertex_count(), edges, root).unwrap()
}

#[test]
fn canonical_codes_ignore_vertex_names() {
    let mut rng = RngStream::new(2, 2).rng();
    for (model, n) in [(Model::Cacti3, 14), (Model::Ktree2, 10), (Model::Ktree3, 8), (Model::Polya, 16)] {
        let g = decode(&draw(model, n, 0), &model.decoding()).unwrap();
        let code = canonical_graph_code(&g).unwrap();
        let mut perm: Vec<u32> = (0..g.vertex_count() as u32).collect();
        for _ in 0..1000 {
            perm.shuffle(&mut rng);
            assert_eq!(canonical_graph_code(&relabel(&g, &perm)).unwrap(), code, "{model}");
        }
    }
}

#[test]
fn decoded_graphs_have_the_right_shape() {
    for i in 0..50 {
        let t = draw(Model::Polya, 30, i);
        let g = tree_graph(&t);
        assert_eq!((g.vertex_count(), g.edges().len()), (30, 29));
        assert!(g.is_connected());

        let g = decode(&draw(Model::Cacti3, 30, i), &Model::Cacti3.decoding()).unwrap();
        assert_eq!(g.vertex_count(), 30);
        assert!(is_cactus(&g, 3));
        let triangles = g.blocks().iter().filter(|b| b.vertices.len() == 3).count();
        assert_eq!(g.edges().len(), 29 + triangles);

        for k in [2, 3] {
            let model = if k == 2 { Model::Ktree2 } else { Model::Ktree3 };
            let g = decode(&draw(model, 20, i), &model.decoding()).unwrap();
            assert_eq!(g.vertex_count(), 20 + k);
            assert_eq!(g.edges().len(), k * (k - 1) / 2 + 20 * k);
            assert!(is_ktree(&g, k));
            assert!(!is_ktree(&g, k + 1));
        }
    }
}

#[test]
fn recognisers_reject_near_misses() {
    let square = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)], Root::Vertex(0)).unwrap();
    let k4 = Graph::new(4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], Root::Vertex(0)).unwrap();
    let diamond = Graph::new(4, vec![(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)], Root::Vertex(0)).unwrap();
    assert!(!is_ktree(&square, 2));
    assert!(!is_ktree(&k4, 2));
    assert!(is_ktree(&k4, 3));
    assert!(is_ktree(&diamond, 2));
    assert!(!is_cactus(&square, 3));
    assert!(is_cactus(&square, 4));
    assert!(!is_cactus(&diamond, 3));
    let split = Graph::new(3, vec![(0, 1)], Root::Vertex(0)).unwrap();
    assert!(!is_cactus(&split, 3));
}
